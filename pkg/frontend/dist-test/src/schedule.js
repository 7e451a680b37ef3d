/** Duty-cycle schedule editor model: builds the plan the API accepts. */
export class ScheduleDraft {
    constructor() {
        this.entries = [];
    }
    add(waveformId, params = {}) {
        this.entries.push({ waveform_id: waveformId, params, on_s: 5, off_s: 5, repeat: 1 });
    }
    remove(index) {
        this.entries.splice(index, 1);
    }
    update(index, patch) {
        const e = this.entries[index];
        if (e)
            this.entries[index] = { ...e, ...patch };
    }
    /** Problems that would make the server reject the plan. */
    problems() {
        const out = [];
        this.entries.forEach((e, i) => {
            if (!e.waveform_id)
                out.push(`entry ${i}: waveform required`);
            if (!(e.on_s > 0) || !(e.off_s > 0))
                out.push(`entry ${i}: durations must be > 0`);
            if (!Number.isInteger(e.repeat) || e.repeat < 1)
                out.push(`entry ${i}: repeat must be >= 1`);
        });
        return out;
    }
    totalSeconds() {
        return this.entries.reduce((acc, e) => acc + e.repeat * (e.on_s + e.off_s), 0);
    }
}
