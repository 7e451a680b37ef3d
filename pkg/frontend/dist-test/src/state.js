/** Session view state: mirrors only server-acknowledged facts. No optimistic
 * transitions; every mutation applies the ack (or the error) it got back. */
export function initialView() {
    return {
        session: { state: "Idle", active_waveform: null, stream_clock: 0 },
        lastSwitch: null,
        power: null,
        connection: "connecting",
        lastError: null,
    };
}
/** Button gating per the session transition graph. */
export function enabledControls(state) {
    switch (state) {
        case "Idle":
        case "Stopped":
            return new Set(["start", "schedule"]);
        case "Running":
            return new Set(["pause", "stop", "switch"]);
        case "Paused":
            return new Set(["resume", "stop"]);
    }
}
export class SessionStore {
    constructor() {
        this.view = initialView();
        this.listeners = [];
    }
    subscribe(fn) {
        this.listeners.push(fn);
        fn(this.view);
    }
    emit() {
        for (const fn of this.listeners)
            fn(this.view);
    }
    /** Apply a server acknowledgment of a session mutation. */
    applyAck(state) {
        this.view = { ...this.view, session: state, lastError: null };
        this.emit();
    }
    applySwitchAck(ev, state) {
        this.view = { ...this.view, session: state, lastSwitch: ev, lastError: null };
        this.emit();
    }
    applyError(message) {
        this.view = { ...this.view, lastError: message };
        this.emit();
    }
    applyPower(power) {
        this.view = { ...this.view, power };
        this.emit();
    }
    applyConnection(connection) {
        this.view = { ...this.view, connection };
        this.emit();
    }
    /** Stream events carry authoritative state transitions and switches. */
    applyStream(msg) {
        if (msg.kind !== "event")
            return;
        const p = msg.payload;
        if (p.kind === "state" && typeof p.state === "string") {
            const active = p.state === "Running" && typeof p.waveform_id === "string"
                ? p.waveform_id
                : p.state === "Stopped"
                    ? null
                    : this.view.session.active_waveform;
            this.view = {
                ...this.view,
                session: {
                    state: p.state,
                    active_waveform: active,
                    stream_clock: p.index ?? this.view.session.stream_clock,
                },
            };
            this.emit();
        }
        else if (p.kind === "switch") {
            const ev = p;
            this.view = {
                ...this.view,
                lastSwitch: ev,
                session: { ...this.view.session, active_waveform: ev.to_waveform },
            };
            this.emit();
        }
    }
}
