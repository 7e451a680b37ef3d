/** Typed client for the control service; the API is the only coupling to
 * the engine. Errors surface as ApiError carrying the structured body. */
export class ApiError extends Error {
    constructor(status, body) {
        super(`${body.error.code}: ${body.error.detail}`);
        this.status = status;
        this.body = body;
    }
    get code() {
        return this.body.error.code;
    }
}
export class ApiClient {
    constructor(base = "", fetchImpl = (u, i) => fetch(u, i)) {
        this.base = base;
        this.fetchImpl = fetchImpl;
    }
    async request(path, init) {
        const resp = await this.fetchImpl(this.base + path, init);
        const body = await resp.json();
        if (!resp.ok) {
            throw new ApiError(resp.status, body);
        }
        return body;
    }
    post(path, payload) {
        return this.request(path, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(payload),
        });
    }
    devices() {
        return this.request("/v1/devices");
    }
    assignRole(deviceId, role) {
        return this.post(`/v1/devices/${deviceId}/role`, { role });
    }
    waveforms() {
        return this.request("/v1/waveforms");
    }
    form(waveformId) {
        return this.request(`/v1/waveforms/${waveformId}/form`);
    }
    registerWaveform(descriptor, binding) {
        return this.post("/v1/waveforms", { descriptor, generator_binding: binding });
    }
    start(waveform, params) {
        return this.post("/v1/session/start", { waveform, params });
    }
    pause() {
        return this.post("/v1/session/pause", {});
    }
    resume() {
        return this.post("/v1/session/resume", {});
    }
    stop() {
        return this.post("/v1/session/stop", {});
    }
    switch(waveform, params) {
        return this.post("/v1/session/switch", { waveform, params });
    }
    schedule(entries) {
        return this.post("/v1/schedule", { entries });
    }
    power() {
        return this.request("/v1/power");
    }
    runs() {
        return this.request("/v1/runs");
    }
    run(runId) {
        return this.request(`/v1/runs/${runId}`);
    }
}
/** SSE subscription with automatic reconnect and visible status. */
export class StreamConnection {
    constructor(url, onMessage, onStatus = () => { }, makeSource = (u) => new EventSource(u), scheduleRetry = (fn, ms) => {
        setTimeout(fn, ms);
    }, retryMs = 1000) {
        this.url = url;
        this.onMessage = onMessage;
        this.onStatus = onStatus;
        this.makeSource = makeSource;
        this.scheduleRetry = scheduleRetry;
        this.status = "connecting";
        this.source = null;
        this.closed = false;
        this.retryMs = retryMs;
        this.connect();
    }
    setStatus(s) {
        this.status = s;
        this.onStatus(s);
    }
    connect() {
        if (this.closed)
            return;
        this.source = this.makeSource(this.url);
        this.source.onmessage = (ev) => {
            this.setStatus("open");
            try {
                this.onMessage(JSON.parse(ev.data));
            }
            catch {
                // malformed frame: drop, never crash the stream handler
            }
        };
        this.source.onerror = () => {
            if (this.closed)
                return;
            this.source?.close();
            this.setStatus("reconnecting");
            this.scheduleRetry(() => this.connect(), this.retryMs);
        };
    }
    close() {
        this.closed = true;
        this.source?.close();
    }
}
