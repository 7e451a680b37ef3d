/** Typed client for the control service; the API is the only coupling to
 * the engine. Errors surface as ApiError carrying the structured body. */

import type {
  ApiErrorBody,
  Descriptor,
  DeviceInfo,
  FormSpec,
  PowerStatus,
  ScheduleEntryDraft,
  SessionState,
  StreamMessage,
  SwitchEvent,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly body: ApiErrorBody;

  constructor(status: number, body: ApiErrorBody) {
    super(`${body.error.code}: ${body.error.detail}`);
    this.status = status;
    this.body = body;
  }

  get code(): string {
    return this.body.error.code;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    readonly base: string = "",
    private readonly fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, init);
    const body = await resp.json();
    if (!resp.ok) {
      throw new ApiError(resp.status, body as ApiErrorBody);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  devices(): Promise<DeviceInfo[]> {
    return this.request("/v1/devices");
  }

  assignRole(deviceId: string, role: string): Promise<DeviceInfo> {
    return this.post(`/v1/devices/${deviceId}/role`, { role });
  }

  waveforms(): Promise<Descriptor[]> {
    return this.request("/v1/waveforms");
  }

  form(waveformId: string): Promise<FormSpec> {
    return this.request(`/v1/waveforms/${waveformId}/form`);
  }

  registerWaveform(descriptor: unknown, binding?: string): Promise<{ registered: string }> {
    return this.post("/v1/waveforms", { descriptor, generator_binding: binding });
  }

  start(waveform: string, params: Record<string, unknown>): Promise<SessionState> {
    return this.post("/v1/session/start", { waveform, params });
  }

  pause(): Promise<SessionState> {
    return this.post("/v1/session/pause", {});
  }

  resume(): Promise<SessionState> {
    return this.post("/v1/session/resume", {});
  }

  stop(): Promise<SessionState> {
    return this.post("/v1/session/stop", {});
  }

  switch(
    waveform: string,
    params: Record<string, unknown>,
  ): Promise<{ switch: SwitchEvent; session: SessionState }> {
    return this.post("/v1/session/switch", { waveform, params });
  }

  schedule(entries: ScheduleEntryDraft[]): Promise<{ session: SessionState; entries: number }> {
    return this.post("/v1/schedule", { entries });
  }

  power(): Promise<PowerStatus> {
    return this.request("/v1/power");
  }

  runs(): Promise<string[]> {
    return this.request("/v1/runs");
  }

  run(runId: string): Promise<Record<string, unknown>> {
    return this.request(`/v1/runs/${runId}`);
  }
}

/** Minimal EventSource surface so tests can inject a fake. */
export interface EventSourceLike {
  onmessage: ((ev: { data: string }) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export type ConnectionStatus = "connecting" | "open" | "reconnecting";

/** SSE subscription with automatic reconnect and visible status. */
export class StreamConnection {
  status: ConnectionStatus = "connecting";
  private source: EventSourceLike | null = null;
  private closed = false;
  private retryMs: number;

  constructor(
    private readonly url: string,
    private readonly onMessage: (msg: StreamMessage) => void,
    private readonly onStatus: (status: ConnectionStatus) => void = () => {},
    private readonly makeSource: EventSourceFactory = (u) =>
      new EventSource(u) as unknown as EventSourceLike,
    private readonly scheduleRetry: (fn: () => void, ms: number) => void = (fn, ms) => {
      setTimeout(fn, ms);
    },
    retryMs = 1000,
  ) {
    this.retryMs = retryMs;
    this.connect();
  }

  private setStatus(s: ConnectionStatus): void {
    this.status = s;
    this.onStatus(s);
  }

  private connect(): void {
    if (this.closed) return;
    this.source = this.makeSource(this.url);
    this.source.onmessage = (ev) => {
      this.setStatus("open");
      try {
        this.onMessage(JSON.parse(ev.data) as StreamMessage);
      } catch {
        // malformed frame: drop, never crash the stream handler
      }
    };
    this.source.onerror = () => {
      if (this.closed) return;
      this.source?.close();
      this.setStatus("reconnecting");
      this.scheduleRetry(() => this.connect(), this.retryMs);
    };
  }

  close(): void {
    this.closed = true;
    this.source?.close();
  }
}
