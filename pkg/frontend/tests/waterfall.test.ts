import assert from "node:assert/strict";
import { test } from "node:test";

import { WaterfallModel, decodeBins, toDb } from "../src/waterfall.js";
import { streamFixture } from "./fixtures.js";

const recorded = streamFixture("duty_stream.jsonl");

test("recorded duty-cycle stream decodes into finite dB rows", () => {
  const model = new WaterfallModel();
  for (const msg of recorded) model.ingest(msg);
  assert.ok(model.rows.length >= 20, `rows ${model.rows.length}`);
  for (const row of model.rows) {
    assert.equal(row.db.length, 256);
    for (const v of row.db) assert.ok(Number.isFinite(v));
  }
});

test("waterfall shows alternating on/off banding from the recorded schedule", () => {
  const model = new WaterfallModel();
  for (const msg of recorded) model.ingest(msg);
  // split bright/dark with a threshold between the two observed levels
  const means = model.rows.map((r) => r.meanDb).sort((a, b) => a - b);
  const lo = means[0];
  const hi = means[means.length - 1];
  assert.ok(hi - lo > 20, `expected >20 dB contrast, got ${(hi - lo).toFixed(1)}`);
  const bands = model.bands((lo + hi) / 2);
  // 3 on + 3 off windows -> alternating bands, allowing edge frames
  const wide = bands.filter((b) => b.rows >= 2);
  assert.ok(wide.length >= 5, `bands: ${JSON.stringify(bands)}`);
  for (let i = 1; i < wide.length; i++) {
    assert.notEqual(wide[i].active, wide[i - 1].active, "bands alternate");
  }
  assert.equal(wide[0].active, true, "schedule starts with an on window");
});

test("boundary markers land between the bands they delimit", () => {
  const model = new WaterfallModel();
  for (const msg of recorded) model.ingest(msg);
  const boundaries = model.markers.filter((m) => m.kind === "on" || m.kind === "off");
  assert.ok(boundaries.length >= 6);
  const onIdx = boundaries.filter((m) => m.kind === "on").map((m) => m.timestamp);
  // recorded plan: 0.5 s on / 0.5 s off at 250 kHz -> on-starts every 250k
  // samples from wherever the stream clock stood when the schedule began
  onIdx.forEach((ts, k) => assert.equal(ts - onIdx[0], k * 250_000));
});

test("sequence gaps are surfaced as dropped frames, never interpolated", () => {
  const model = new WaterfallModel();
  const thinned = recorded.filter((m) => m.kind === "spectrum").filter((_, i) => i % 2 === 0);
  for (const msg of thinned) model.ingest(msg);
  assert.ok(model.dropped > 0);
  assert.ok(model.rows.some((r) => r.afterDrop));
  assert.equal(model.rows.length, thinned.length); // nothing synthesized
});

test("dB conversion clamps zeros to the floor", () => {
  const bins = new Float32Array([0, 1e-12, 1]);
  const db = toDb(bins, -160);
  assert.equal(db[0], -160);
  assert.ok(Math.abs(db[1] - -120) < 1e-6);
  assert.equal(db[2], 0);
});

test("base64 round trip matches the wire encoding", () => {
  const payload = recorded.find((m) => m.kind === "spectrum")!.payload as {
    psd_b64: string;
  };
  const bins = decodeBins(payload.psd_b64);
  assert.equal(bins.length, 256);
  assert.ok(bins.every((v) => v >= 0));
});
