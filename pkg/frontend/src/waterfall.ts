/** Scrolling spectrum waterfall fed by the stream subscription.
 *
 * Rows are dB-scaled client-side (the wire carries linear power). Schedule
 * on/off boundaries and switch events overlay as markers; dropped frames
 * (sequence-number gaps) are indicated, never interpolated. */

import type { SpectrumPayload, StreamMessage } from "./types.js";

export function decodeBins(b64: string): Float32Array {
  let bytes: Uint8Array;
  if (typeof atob === "function") {
    const raw = atob(b64);
    bytes = new Uint8Array(raw.length);
    for (let i = 0; i < raw.length; i++) bytes[i] = raw.charCodeAt(i);
  } else {
    // node (tests)
    bytes = new Uint8Array(Buffer.from(b64, "base64"));
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const out = new Float32Array(bytes.byteLength / 4);
  for (let i = 0; i < out.length; i++) out[i] = view.getFloat32(i * 4, true);
  return out;
}

export function toDb(bins: Float32Array, floorDb = -160): Float32Array {
  const out = new Float32Array(bins.length);
  for (let i = 0; i < bins.length; i++) {
    out[i] = bins[i] > 0 ? Math.max(10 * Math.log10(bins[i]), floorDb) : floorDb;
  }
  return out;
}

export interface WaterfallRow {
  timestamp: number;
  windowId: number;
  db: Float32Array;
  meanDb: number;
  /** frames were lost immediately before this row (seq gap) */
  afterDrop: boolean;
}

export interface Marker {
  timestamp: number;
  label: string;
  kind: "on" | "off" | "switch" | "end";
}

export class WaterfallModel {
  rows: WaterfallRow[] = [];
  markers: Marker[] = [];
  dropped = 0;
  private lastSeq: number | null = null;
  private pendingDrop = false;

  constructor(readonly maxRows = 256) {}

  ingest(msg: StreamMessage): void {
    if (this.lastSeq !== null && msg.seq > this.lastSeq + 1) {
      this.dropped += msg.seq - this.lastSeq - 1;
      this.pendingDrop = true;
    }
    this.lastSeq = msg.seq;
    if (msg.kind === "spectrum") {
      const p = msg.payload as unknown as SpectrumPayload;
      const db = toDb(decodeBins(p.psd_b64));
      let mean = 0;
      for (const v of db) mean += v;
      this.rows.push({
        timestamp: p.timestamp,
        windowId: p.window_id,
        db,
        meanDb: db.length ? mean / db.length : -160,
        afterDrop: this.pendingDrop,
      });
      this.pendingDrop = false;
      if (this.rows.length > this.maxRows) this.rows.shift();
    } else if (msg.kind === "event") {
      const p = msg.payload as Record<string, unknown>;
      if (p.kind === "boundary") {
        this.markers.push({
          timestamp: (p.index as number) ?? 0,
          label: String(p.transition ?? ""),
          kind: (p.transition as Marker["kind"]) ?? "on",
        });
      } else if (p.kind === "switch") {
        this.markers.push({
          timestamp: (p.next_start_index as number) ?? 0,
          label: `${p.from_waveform ?? "-"} → ${p.to_waveform ?? "?"}`,
          kind: "switch",
        });
      }
    }
  }

  /** Split rows into contiguous bands by a power threshold (dB); used by the
   * tests to check on/off banding and by the legend. */
  bands(thresholdDb: number): { active: boolean; rows: number }[] {
    const out: { active: boolean; rows: number }[] = [];
    for (const row of this.rows) {
      const active = row.meanDb > thresholdDb;
      const last = out[out.length - 1];
      if (last && last.active === active) last.rows += 1;
      else out.push({ active, rows: 1 });
    }
    return out;
  }
}

/** Canvas painter (browser only). */
export class WaterfallView {
  private readonly ctx: CanvasRenderingContext2D;

  constructor(private readonly canvas: HTMLCanvasElement, private readonly model: WaterfallModel) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2d canvas unavailable");
    this.ctx = ctx;
  }

  private color(db: number, lo: number, hi: number): string {
    const t = Math.min(1, Math.max(0, (db - lo) / (hi - lo)));
    const hue = 240 - 240 * t; // blue floor -> red peak
    return `hsl(${hue}, 90%, ${20 + 40 * t}%)`;
  }

  paint(loDb = -120, hiDb = 0): void {
    const { width, height } = this.canvas;
    this.ctx.clearRect(0, 0, width, height);
    const rows = this.model.rows;
    if (!rows.length) return;
    const rowH = Math.max(1, Math.floor(height / this.model.maxRows));
    rows.forEach((row, r) => {
      const y = height - (rows.length - r) * rowH;
      const binW = width / row.db.length;
      for (let b = 0; b < row.db.length; b++) {
        this.ctx.fillStyle = this.color(row.db[b], loDb, hiDb);
        this.ctx.fillRect(b * binW, y, Math.ceil(binW), rowH);
      }
      if (row.afterDrop) {
        this.ctx.fillStyle = "#ffffff";
        this.ctx.fillRect(0, y, 6, rowH); // visible dropped-frame tick
      }
    });
    // boundary / switch markers on the most recent rows
    this.ctx.font = "10px monospace";
    for (const m of this.model.markers.slice(-12)) {
      const row = rows.findIndex((r) => r.timestamp >= m.timestamp);
      if (row < 0) continue;
      const y = height - (rows.length - row) * rowH;
      this.ctx.strokeStyle = m.kind === "switch" ? "#ffd54a" : "#ffffff";
      this.ctx.beginPath();
      this.ctx.moveTo(0, y);
      this.ctx.lineTo(width, y);
      this.ctx.stroke();
      this.ctx.fillStyle = "#ffffff";
      this.ctx.fillText(m.label, 4, y - 2);
    }
  }
}
