#!/usr/bin/env python3
"""Duty-cycled interference trial on the scenario1 preset.

QPSK link, OFDM interference with a 5 s on / 5 s off cycle over one minute;
prints the per-second throughput/ASER/KLD table and the on/off means.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from stormbench.channel import load_scene
from stormbench.locate import default_scene_dir, default_waveform_dir
from stormbench.metrics import EngineSource, LinkConfig, collect_reference_preambles, run_link_trial
from stormbench.orchestrator import ScheduleEntry, SchedulePlan, SessionEngine, discover_devices
from stormbench.registry import WaveformRegistry, load_builtins


def main() -> int:
    fs = 250e3
    scene = load_scene(default_scene_dir() / "scenario1.json")
    registry = WaveformRegistry()
    load_builtins(registry, default_waveform_dir())
    engine = SessionEngine(registry, discover_devices(), sample_rate=fs, buffer_len=4096)
    engine.assign_role("sim-tx-eth0", "transmitter")
    engine.load_schedule(
        SchedulePlan((ScheduleEntry("ofdm", {"gain": 10.0}, on_s=5.0, off_s=5.0, repeat=6),))
    )

    link = LinkConfig(modulation="QPSK", frame_payload_symbols=128, samples_per_symbol=4)
    print("collecting interference-free reference ...", file=sys.stderr)
    ref = collect_reference_preambles(link, scene, seed=1, sample_rate=fs)
    print("running 60 s duty-cycled trial ...", file=sys.stderr)
    result = run_link_trial(
        link, EngineSource(engine), scene, 60.0, seed=1, sample_rate=fs,
        reference_preambles=ref,
    )

    print(f"{'t (s)':<8} {'state':<6} {'kbps':<10} {'ASER':<8} {'KLD (nats)'}")
    for w, rec in enumerate(result.records):
        state = "ON" if (w // 5) % 2 == 0 else "off"
        print(
            f"{rec.timestamp:<8.0f} {state:<6} {rec.throughput_bps / 1e3:<10.2f} "
            f"{rec.aser:<8.3f} {rec.kld:.3f}"
        )
    tput = np.array(result.throughput_bps)
    on = tput[[w for w in range(60) if (w // 5) % 2 == 0]].mean()
    off = tput[[w for w in range(60) if (w // 5) % 2 == 1]].mean()
    print(f"\non-window mean  {on / 1e3:8.2f} kbps")
    print(f"off-window mean {off / 1e3:8.2f} kbps")
    print(f"on/off ratio    {on / off:8.2%}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
