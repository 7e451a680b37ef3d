#!/usr/bin/env python3
"""Record API fixtures for the frontend contract tests.

Captures real control-service responses (devices, waveforms, forms, power,
session acknowledgments, structured errors) plus a duty-cycled stream
recording, into frontend/tests/fixtures/. The UI test suite runs against
these files without the engine.
"""

import json
import sys
from pathlib import Path

repo = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(repo / "src"))

from fastapi.testclient import TestClient

from stormbench.service import ServiceConfig, create_app


def main() -> int:
    out = repo / "frontend" / "tests" / "fixtures"
    out.mkdir(parents=True, exist_ok=True)

    cfg = ServiceConfig(
        sample_rate=250e3,
        buffer_len=4096,
        pacing="off",
        stream_rate=20.0,
        fft_size=256,
        run_dir=str(repo / ".fixture-runs"),
        open_run=False,
    )
    app = create_app(cfg)
    with TestClient(app) as client:
        ctl = app.state.controller

        def dump(name, payload):
            (out / name).write_text(json.dumps(payload, indent=2) + "\n")

        dump("devices.json", client.get("/v1/devices").json())
        dump("waveforms.json", client.get("/v1/waveforms").json())
        forms = {
            d["waveform_name"]: client.get(f"/v1/waveforms/{d['waveform_name']}/form").json()
            for d in client.get("/v1/waveforms").json()
        }
        dump("forms.json", forms)
        dump("power.json", client.get("/v1/power").json())

        flow = {}
        flow["switch_while_idle"] = {
            "status": 409,
            "body": client.post("/v1/session/switch", json={"waveform": "ofdm"}).json(),
        }
        r = client.post("/v1/session/start", json={"waveform": "baseline", "params": {"gain": 99}})
        flow["bad_params"] = {"status": r.status_code, "body": r.json()}
        flow["start"] = client.post("/v1/session/start", json={"waveform": "baseline"}).json()
        for _ in range(4):
            ctl.pump_once()
        flow["switch"] = client.post("/v1/session/switch", json={"waveform": "ofdm"}).json()
        flow["pause"] = client.post("/v1/session/pause", json={}).json()
        flow["resume"] = client.post("/v1/session/resume", json={}).json()
        flow["stop"] = client.post("/v1/session/stop", json={}).json()
        flow["stop_again"] = {
            "status": 409,
            "body": client.post("/v1/session/stop", json={}).json(),
        }
        dump("session_flow.json", flow)

        # duty-cycled stream: subscribe to the hub and pump a schedule through
        q = ctl.hub.subscribe()
        plan = {
            "entries": [
                {"waveform_id": "ofdm", "params": {"gain": 10}, "on_s": 0.5, "off_s": 0.5,
                 "repeat": 3}
            ]
        }
        assert client.post("/v1/schedule", json=plan).status_code == 200
        while ctl.engine.schedule_active():
            ctl.pump_once()
        messages = []
        while not q.empty():
            messages.append(q.get_nowait())
        ctl.hub.unsubscribe(q)
        with open(out / "duty_stream.jsonl", "w") as fh:
            for m in messages:
                fh.write(json.dumps(m) + "\n")
        kinds = {}
        for m in messages:
            kinds[m["kind"]] = kinds.get(m["kind"], 0) + 1
        print(f"recorded {len(messages)} stream messages: {kinds}")
    print(f"fixtures written to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
