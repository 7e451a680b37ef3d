"""stormbench command line: serve, run, validate, metrics.

    stormbench serve --config service.json
    stormbench run --scene scenes/scenario1.json --schedule trial.json --out runs/
    stormbench validate waveforms/ofdm.json
    stormbench metrics --run <run_id> [--run-dir runs/]

STORMBENCH_RUN_DIR overrides the default run directory.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .channel import load_scene
from .core import IqBuffer
from .datalog import RunWriter, load_run, read_capture
from .locate import default_run_dir, default_waveform_dir
from .metrics import (
    EngineSource,
    LinkConfig,
    analyze_rx_capture,
    collect_reference_preambles,
    preamble_cloud_from_rx,
    run_link_trial,
)
from .orchestrator import SchedulePlan, SessionEngine, discover_devices
from .registry import (
    ValidationReport,
    WaveformRegistry,
    load_builtins,
    serialize_descriptor,
    validate_descriptor,
)
from .errors import ParseError


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        result = validate_descriptor(Path(args.descriptor).read_text(encoding="utf-8"))
    except ParseError as e:
        print(json.dumps({"ok": False, "parse_error": str(e)}))
        return 2
    if isinstance(result, ValidationReport):
        print(json.dumps(result.to_dict(), indent=2))
        return 1
    print(json.dumps({"ok": True, "descriptor": serialize_descriptor(result)}, indent=2))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from .service import ServiceConfig, serve

    cfg = ServiceConfig.from_file(args.config) if args.config else ServiceConfig()
    serve(cfg)
    return 0


def _build_run_engine(spec: dict, registry: WaveformRegistry) -> SessionEngine:
    engine = SessionEngine(
        registry,
        discover_devices(spec.get("device_config")),
        sample_rate=float(spec.get("sample_rate", 250e3)),
        center_frequency=float(spec.get("center_frequency", 2.45e9)),
        buffer_len=int(spec.get("buffer_len", 4096)),
    )
    devices = engine.list_devices()
    if devices:
        engine.assign_role(devices[0].device_id, "transmitter")
    if len(devices) > 1:
        engine.assign_role(devices[1].device_id, "monitor")
    return engine


def _cmd_run(args: argparse.Namespace) -> int:
    spec = json.loads(Path(args.schedule).read_text(encoding="utf-8"))
    scene = load_scene(args.scene)
    out_dir = Path(args.out) if args.out else default_run_dir()
    out_dir.mkdir(parents=True, exist_ok=True)

    registry = WaveformRegistry()
    load_builtins(registry, args.waveform_dir or default_waveform_dir())
    engine = _build_run_engine(spec, registry)
    fs = engine.sample_rate
    seed = int(spec.get("seed", 0))
    link = LinkConfig.from_dict(spec.get("link", {}))
    plan = SchedulePlan.from_dict(spec)
    duration = sum(e.repeat * (e.on_s + e.off_s) for e in plan.entries)
    window_s = float(spec.get("window_s", 1.0))
    capture_s = float(spec.get("capture_s", min(2.0, duration)))
    capture_n = int(capture_s * fs)

    used = sorted({e.waveform_id for e in plan.entries})
    run_id = args.run_id or time.strftime("run-%Y%m%dT%H%M%S", time.gmtime())
    writer = RunWriter(
        out_dir,
        run_id,
        config={
            "schedule": spec,
            "scene": scene.to_dict(),
            "link": link.to_dict(),
            "seed": seed,
            "sample_rate": fs,
            "registry_snapshot": {w: serialize_descriptor(registry.get(w)) for w in used},
        },
    )
    engine.on_event(writer.append_event)

    print(f"[run {run_id}] reference pass", file=sys.stderr)
    ref_cloud = collect_reference_preambles(link, scene, seed, fs)
    ref_chunks: list[np.ndarray] = []

    def ref_tap(buf: IqBuffer) -> None:
        have = sum(len(c) for c in ref_chunks)
        if have < capture_n:
            ref_chunks.append(buf.samples)

    run_link_trial(
        link,
        None,
        scene,
        capture_s,
        seed=seed,
        sample_rate=fs,
        window_s=window_s,
        reference_preambles=ref_cloud,
        on_rx=ref_tap,
    )
    ref_samples = np.concatenate(ref_chunks)[:capture_n]
    writer.capture_iq(IqBuffer(ref_samples, fs, 0), "reference")

    print(f"[run {run_id}] scheduled trial ({duration:.1f} s stream time)", file=sys.stderr)
    engine.load_schedule(plan)
    rx_chunks: list[np.ndarray] = []

    def rx_tap(buf: IqBuffer) -> None:
        have = sum(len(c) for c in rx_chunks)
        if have < capture_n:
            rx_chunks.append(buf.samples)

    result = run_link_trial(
        link,
        EngineSource(engine),
        scene,
        duration,
        seed=seed,
        sample_rate=fs,
        window_s=window_s,
        reference_preambles=ref_cloud,
        context={"schedule": [e.waveform_id for e in plan.entries], "run_id": run_id},
        on_rx=rx_tap,
    )
    writer.capture_iq(IqBuffer(np.concatenate(rx_chunks)[:capture_n], fs, 0), "rx_head")
    for rec in result.records:
        writer.append_metrics(rec)
    manifest = writer.close()
    print(
        json.dumps(
            {
                "run_id": manifest.run_id,
                "windows": len(result.records),
                "nominal_bps": result.nominal_throughput_bps,
                "mean_bps": result.mean_throughput(),
                "switch_events": len(engine.switch_events),
            },
            indent=2,
        )
    )
    return 0


def _cmd_metrics(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir) if args.run_dir else default_run_dir()
    path = run_dir / args.run
    manifest = load_run(path)
    link = LinkConfig.from_dict(manifest.config.get("link", {}))
    rx = read_capture(path, "rx_head")
    ref = read_capture(path, "reference")
    cloud = preamble_cloud_from_rx(link, ref)
    records = analyze_rx_capture(
        link,
        rx,
        cloud,
        window_s=float(manifest.config.get("schedule", {}).get("window_s", 1.0)),
        context={"run_id": manifest.run_id, "recomputed": True},
    )
    for rec in records:
        print(json.dumps(rec.to_dict(), sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stormbench", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("serve", help="run the HTTP control service")
    sp.add_argument("--config", help="service config JSON", default=None)
    sp.set_defaults(fn=_cmd_serve)

    rp = sub.add_parser("run", help="headless scheduled trial against a scene")
    rp.add_argument("--scene", required=True, help="scene preset JSON")
    rp.add_argument("--schedule", required=True, help="run-spec JSON (link + entries)")
    rp.add_argument("--out", default=None, help="runs directory (default: STORMBENCH_RUN_DIR or ./runs)")
    rp.add_argument("--run-id", default=None)
    rp.add_argument("--waveform-dir", default=None)
    rp.set_defaults(fn=_cmd_run)

    vp = sub.add_parser("validate", help="validate a waveform descriptor")
    vp.add_argument("descriptor")
    vp.set_defaults(fn=_cmd_validate)

    mp = sub.add_parser("metrics", help="recompute ASER/KLD from a run's captures")
    mp.add_argument("--run", required=True, help="run id")
    mp.add_argument("--run-dir", default=None)
    mp.set_defaults(fn=_cmd_metrics)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
