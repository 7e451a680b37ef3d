/** Session view state: mirrors only server-acknowledged facts. No optimistic
 * transitions; every mutation applies the ack (or the error) it got back. */

import type {
  ConnectionStatus,
} from "./api.js";
import type {
  PowerStatus,
  SessionState,
  SessionStateName,
  StreamMessage,
  SwitchEvent,
} from "./types.js";

export interface UiSessionView {
  session: SessionState;
  lastSwitch: SwitchEvent | null;
  power: PowerStatus | null;
  connection: ConnectionStatus;
  lastError: string | null;
}

export function initialView(): UiSessionView {
  return {
    session: { state: "Idle", active_waveform: null, stream_clock: 0 },
    lastSwitch: null,
    power: null,
    connection: "connecting",
    lastError: null,
  };
}

export type Control = "start" | "pause" | "resume" | "stop" | "switch" | "schedule";

/** Button gating per the session transition graph. */
export function enabledControls(state: SessionStateName): Set<Control> {
  switch (state) {
    case "Idle":
    case "Stopped":
      return new Set<Control>(["start", "schedule"]);
    case "Running":
      return new Set<Control>(["pause", "stop", "switch"]);
    case "Paused":
      return new Set<Control>(["resume", "stop"]);
  }
}

export class SessionStore {
  view: UiSessionView = initialView();
  private listeners: ((v: UiSessionView) => void)[] = [];

  subscribe(fn: (v: UiSessionView) => void): void {
    this.listeners.push(fn);
    fn(this.view);
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.view);
  }

  /** Apply a server acknowledgment of a session mutation. */
  applyAck(state: SessionState): void {
    this.view = { ...this.view, session: state, lastError: null };
    this.emit();
  }

  applySwitchAck(ev: SwitchEvent, state: SessionState): void {
    this.view = { ...this.view, session: state, lastSwitch: ev, lastError: null };
    this.emit();
  }

  applyError(message: string): void {
    this.view = { ...this.view, lastError: message };
    this.emit();
  }

  applyPower(power: PowerStatus): void {
    this.view = { ...this.view, power };
    this.emit();
  }

  applyConnection(connection: ConnectionStatus): void {
    this.view = { ...this.view, connection };
    this.emit();
  }

  /** Stream events carry authoritative state transitions and switches. */
  applyStream(msg: StreamMessage): void {
    if (msg.kind !== "event") return;
    const p = msg.payload as Record<string, unknown>;
    if (p.kind === "state" && typeof p.state === "string") {
      const active =
        p.state === "Running" && typeof p.waveform_id === "string"
          ? (p.waveform_id as string)
          : p.state === "Stopped"
            ? null
            : this.view.session.active_waveform;
      this.view = {
        ...this.view,
        session: {
          state: p.state as SessionStateName,
          active_waveform: active,
          stream_clock: (p.index as number) ?? this.view.session.stream_clock,
        },
      };
      this.emit();
    } else if (p.kind === "switch") {
      const ev = p as unknown as SwitchEvent & { kind: string };
      this.view = {
        ...this.view,
        lastSwitch: ev,
        session: { ...this.view.session, active_waveform: ev.to_waveform },
      };
      this.emit();
    }
  }
}
