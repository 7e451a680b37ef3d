"""HTTP control surface and live push stream over the orchestration engine.

HTTP/1.1 + JSON commands; one server-sent-event stream at /v1/stream carrying
spectrum frames (base64 float32 bins), metrics, and session events with
monotone per-subscription sequence numbers. All mutating calls serialize onto
the engine lock; the pump thread emits buffers between commands, so commands
take effect at buffer boundaries. Streaming fan-out is lossy per subscriber;
commands are never lossy.
"""

from __future__ import annotations

import base64
import json
import queue
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from .datalog import RunWriter, load_run
from .errors import (
    CompatibilityError,
    ConfigurationError,
    DuplicateError,
    IllegalState,
    ParseError,
    RoleConflict,
    UnknownWaveform,
)
from .locate import default_console_dir, default_run_dir, default_waveform_dir
from .monitor import SpectrumFrame, SpectrumMonitor
from .orchestrator import SchedulePlan, SessionEngine, discover_devices
from .power import PowerModel
from .registry import ValidationReport, WaveformRegistry, load_builtins, serialize_descriptor


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    sample_rate: float = 1e6
    center_frequency: float = 2.45e9
    buffer_len: int = 4096
    waveform_dir: str | None = None
    scene_dir: str | None = None
    run_dir: str | None = None
    device_config: str | None = None
    console_dir: str | None = None  # static operator console; default frontend/
    pacing: str = "realtime"  # "realtime" | "fast" | "off"
    stream_rate: float = 10.0
    fft_size: int = 1024
    power_capacity_j: float = PowerModel.DEFAULT_CAPACITY_J
    power_load_w: float = PowerModel.DEFAULT_LOAD_W
    open_run: bool = True

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(**doc)


_ERROR_CODES = {
    IllegalState: ("IllegalState", 409),
    RoleConflict: ("RoleConflict", 409),
    DuplicateError: ("DuplicateError", 409),
    CompatibilityError: ("CompatibilityError", 409),
    UnknownWaveform: ("UnknownWaveform", 404),
    ConfigurationError: ("ConfigurationError", 400),
    ParseError: ("ParseError", 400),
}


def _error_response(exc: Exception) -> JSONResponse:
    report = getattr(exc, "report", None)
    if report is not None:
        body = {"error": {"code": "ValidationReport", "detail": str(exc)}}
        body["error"]["report"] = report.to_dict()
        return JSONResponse(body, status_code=400)
    for etype, (code, status) in _ERROR_CODES.items():
        if isinstance(exc, etype):
            return JSONResponse(
                {"error": {"code": code, "detail": str(exc)}}, status_code=status
            )
    raise exc


class StreamHub:
    """Fan-out of stream messages with per-subscription sequence numbers."""

    def __init__(self, maxlen: int = 256):
        self._subs: list[queue.Queue] = []
        self._seqs: dict[int, int] = {}
        self._lock = threading.Lock()
        self.maxlen = maxlen

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=self.maxlen)
        with self._lock:
            self._subs.append(q)
            self._seqs[id(q)] = 0
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subs:
                self._subs.remove(q)
                self._seqs.pop(id(q), None)

    def publish(self, kind: str, payload: Mapping[str, Any]) -> None:
        with self._lock:
            for q in self._subs:
                seq = self._seqs[id(q)]
                self._seqs[id(q)] = seq + 1
                msg = {"seq": seq, "kind": kind, "payload": dict(payload)}
                try:
                    q.put_nowait(msg)
                except queue.Full:
                    try:
                        q.get_nowait()  # drop oldest, keep the stream fresh
                    except queue.Empty:
                        pass
                    q.put_nowait(msg)


def _spectrum_payload(frame: SpectrumFrame) -> dict:
    bins = frame.psd_bins.astype("<f4").tobytes()
    return {
        "timestamp": frame.timestamp,
        "window_id": frame.window_id,
        "bin_spacing": frame.bin_spacing,
        "center_offset": frame.center_offset,
        "psd_b64": base64.b64encode(bins).decode("ascii"),
    }


class Controller:
    """Engine + monitor + power, guarded by one command lock."""

    def __init__(self, cfg: ServiceConfig):
        self.cfg = cfg
        self.lock = threading.RLock()
        self.registry = WaveformRegistry()
        load_builtins(self.registry, cfg.waveform_dir or default_waveform_dir())
        devices = discover_devices(cfg.device_config)
        self.engine = SessionEngine(
            self.registry,
            devices,
            sample_rate=cfg.sample_rate,
            center_frequency=cfg.center_frequency,
            buffer_len=cfg.buffer_len,
        )
        # default role assignment mirrors the two-radio bench layout
        if len(devices) >= 1 and self.engine.transmitter is None:
            self.engine.assign_role(devices[0].device_id, "transmitter")
        if len(devices) >= 2 and self.engine.monitor_device is None:
            self.engine.assign_role(devices[1].device_id, "monitor")
        self.monitor = (
            SpectrumMonitor(
                self.engine, cfg.stream_rate, fft_size=cfg.fft_size
            )
            if self.engine.monitor_device is not None
            else None
        )
        self.power = PowerModel(cfg.power_capacity_j, cfg.power_load_w)
        self.hub = StreamHub()
        self._power_exhausted_sent = False
        self.run_dir = Path(cfg.run_dir) if cfg.run_dir else default_run_dir()
        self.run_writer: RunWriter | None = None
        if cfg.open_run:
            self.run_dir.mkdir(parents=True, exist_ok=True)
            self.run_writer = RunWriter(
                self.run_dir,
                time.strftime("run-%Y%m%dT%H%M%S", time.gmtime()) + f"-{id(self) & 0xFFFF:04x}",
                config={"service": {"sample_rate": cfg.sample_rate, "buffer_len": cfg.buffer_len}},
            )
        self.engine.on_event(self._on_engine_event)
        self._pump_thread: threading.Thread | None = None
        self._pump_stop = threading.Event()

    # -- events --------------------------------------------------------------

    def _on_engine_event(self, event: dict) -> None:
        if self.run_writer is not None:
            self.run_writer.append_event(event)
        self.hub.publish("event", event)

    def emit_metrics(self, record: Mapping[str, Any]) -> None:
        if self.run_writer is not None:
            self.run_writer.append_metrics(record)
        self.hub.publish("metrics", record)

    # -- pump ----------------------------------------------------------------

    def pump_once(self) -> None:
        with self.lock:
            buf = self.engine.step()
            if buf is not None:
                self.power.drain(len(buf) / self.engine.sample_rate)
                if self.power.exhausted and not self._power_exhausted_sent:
                    self._power_exhausted_sent = True
                    self.engine._record("power_exhausted")
            if self.monitor is not None:
                for frame in self.monitor.pump():
                    self.hub.publish("spectrum", _spectrum_payload(frame))

    def _pump_loop(self) -> None:
        while not self._pump_stop.is_set():
            running = self.engine.state == "Running"
            self.pump_once()
            if not running:
                time.sleep(0.01)
            elif self.cfg.pacing == "realtime":
                time.sleep(self.engine.buffer_len / self.engine.sample_rate)

    def start_pump(self) -> None:
        if self.cfg.pacing == "off" or self._pump_thread is not None:
            return
        self._pump_stop.clear()
        self._pump_thread = threading.Thread(target=self._pump_loop, daemon=True)
        self._pump_thread.start()

    def stop_pump(self) -> None:
        self._pump_stop.set()
        if self._pump_thread is not None:
            self._pump_thread.join(timeout=5.0)
            self._pump_thread = None

    def close(self) -> None:
        self.stop_pump()
        if self.run_writer is not None:
            try:
                self.run_writer.close()
            except IllegalState:
                pass
            self.run_writer = None


def create_app(cfg: ServiceConfig | None = None) -> FastAPI:
    cfg = cfg or ServiceConfig()
    ctl = Controller(cfg)

    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        ctl.start_pump()
        try:
            yield
        finally:
            ctl.close()

    app = FastAPI(title="stormbench control service", version="1", lifespan=lifespan)
    app.state.controller = ctl

    # -- devices -------------------------------------------------------------

    @app.get("/v1/devices")
    def get_devices():
        with ctl.lock:
            return [d.to_dict() for d in ctl.engine.list_devices()]

    @app.post("/v1/devices/{device_id}/role")
    async def post_role(device_id: str, request: Request):
        body = await request.json()
        try:
            with ctl.lock:
                dev = ctl.engine.assign_role(device_id, body.get("role", ""))
            return dev.to_dict()
        except Exception as e:  # noqa: BLE001 - mapped to structured errors
            return _error_response(e)

    # -- waveforms -------------------------------------------------------------

    @app.get("/v1/waveforms")
    def get_waveforms():
        with ctl.lock:
            out = []
            for name in ctl.registry.list_waveforms():
                doc = serialize_descriptor(ctl.registry.get(name))
                out.append(doc)
            return out

    @app.post("/v1/waveforms", status_code=201)
    async def post_waveform(request: Request):
        body = await request.json()
        descriptor = body.get("descriptor", body)
        binding = body.get("generator_binding")
        try:
            with ctl.lock:
                rid = ctl.registry.register(descriptor, binding)
                ctl.engine._record("waveform_registered", waveform_id=rid)
            return {"registered": rid}
        except Exception as e:  # noqa: BLE001
            return _error_response(e)

    @app.get("/v1/waveforms/{waveform_id}/form")
    def get_form(waveform_id: str):
        try:
            with ctl.lock:
                return ctl.registry.form_spec(waveform_id).to_dict()
        except Exception as e:  # noqa: BLE001
            return _error_response(e)

    # -- session ---------------------------------------------------------------

    @app.get("/v1/session")
    def get_session():
        with ctl.lock:
            return ctl.engine.session_state().to_dict()

    @app.post("/v1/session/{command}")
    async def post_session(command: str, request: Request):
        try:
            body = await request.json() if await request.body() else {}
        except json.JSONDecodeError:
            body = {}
        try:
            with ctl.lock:
                eng = ctl.engine
                if command == "start":
                    state = eng.start(body.get("waveform", ""), body.get("params", {}))
                elif command == "pause":
                    state = eng.pause()
                elif command == "resume":
                    state = eng.resume()
                elif command == "stop":
                    state = eng.stop()
                elif command == "switch":
                    event = eng.switch_waveform(body.get("waveform", ""), body.get("params", {}))
                    return {"switch": event.to_dict(), "session": eng.session_state().to_dict()}
                else:
                    return JSONResponse(
                        {"error": {"code": "UnknownCommand", "detail": command}}, status_code=404
                    )
            return state.to_dict()
        except Exception as e:  # noqa: BLE001
            return _error_response(e)

    # -- schedule ----------------------------------------------------------------

    @app.post("/v1/schedule")
    async def post_schedule(request: Request):
        body = await request.json()
        try:
            plan = SchedulePlan.from_dict(body)
            with ctl.lock:
                ctl.engine.load_schedule(plan)
                state = ctl.engine.session_state()
            return {"session": state.to_dict(), "entries": len(plan.entries)}
        except Exception as e:  # noqa: BLE001
            return _error_response(e)

    @app.get("/v1/schedule/result")
    def get_schedule_result():
        with ctl.lock:
            result = ctl.engine.last_schedule_result()
            if result is None:
                return JSONResponse(
                    {"error": {"code": "NotFound", "detail": "no completed schedule"}},
                    status_code=404,
                )
            return {
                "switch_events": [e.to_dict() for e in result.switch_events],
                "boundaries": list(result.boundaries),
            }

    # -- power -------------------------------------------------------------------

    @app.get("/v1/power")
    def get_power():
        with ctl.lock:
            return ctl.power.status().to_dict()

    # -- runs ----------------------------------------------------------------------

    @app.get("/v1/runs")
    def get_runs():
        if not ctl.run_dir.exists():
            return []
        return sorted(p.name for p in ctl.run_dir.iterdir() if (p / "events.jsonl").exists())

    @app.get("/v1/runs/{run_id}")
    def get_run(run_id: str):
        path = ctl.run_dir / run_id
        if not path.exists():
            return JSONResponse(
                {"error": {"code": "NotFound", "detail": run_id}}, status_code=404
            )
        if (path / "manifest.json").exists():
            return load_run(path).to_dict()
        if ctl.run_writer is not None and ctl.run_writer.run_id == run_id:
            with ctl.lock:
                return {
                    "run_id": run_id,
                    "created_utc": ctl.run_writer.created_utc,
                    "config": ctl.run_writer.config,
                    "event_count": len(ctl.run_writer._events),
                    "events_file": "events.jsonl",
                    "artifacts": {"captures": [], "metrics": []},
                    "live": True,
                }
        return JSONResponse(
            {"error": {"code": "NotFound", "detail": f"{run_id} is not sealed"}},
            status_code=404,
        )

    # -- stream ------------------------------------------------------------------

    @app.get("/v1/stream")
    def get_stream(limit: int = 0, timeout_s: float = 30.0):
        q = ctl.hub.subscribe()

        def gen():
            sent = 0
            deadline = time.monotonic() + timeout_s
            try:
                while time.monotonic() < deadline:
                    try:
                        msg = q.get(timeout=0.25)
                    except queue.Empty:
                        continue
                    yield f"data: {json.dumps(msg)}\n\n"
                    sent += 1
                    if limit and sent >= limit:
                        break
            finally:
                ctl.hub.unsubscribe(q)

        return StreamingResponse(gen(), media_type="text/event-stream")

    # -- operator console (static) ------------------------------------------

    console = Path(cfg.console_dir) if cfg.console_dir else default_console_dir()
    if console is not None and (console / "index.html").exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(console), html=True), name="console")

    return app


def serve(cfg: ServiceConfig) -> None:
    """Run the control service under uvicorn (blocking)."""
    import uvicorn

    app = create_app(cfg)
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="info")
