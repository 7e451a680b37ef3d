#!/usr/bin/env python3
"""Runtime waveform switching demo: baseline -> dsss -> ofdm -> otfs.

Prints the per-transition gap table measured from the sample clock at a
15.625 Msps simulated session.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from stormbench.locate import default_waveform_dir
from stormbench.orchestrator import SessionEngine, discover_devices
from stormbench.registry import WaveformRegistry, load_builtins


def main() -> int:
    fs = 15.625e6
    registry = WaveformRegistry()
    load_builtins(registry, default_waveform_dir())
    engine = SessionEngine(registry, discover_devices(), sample_rate=fs, buffer_len=4096)
    engine.assign_role("sim-tx-eth0", "transmitter")
    engine.assign_role("sim-rx-usb0", "monitor")

    engine.start("baseline", {"symbol_rate": 976562.5})
    engine.run_for(65536)
    events = []
    for wf in ("dsss", "ofdm", "otfs"):
        events.append(engine.switch_waveform(wf, {}))
        engine.run_for(65536)
    engine.stop()

    print(f"{'From':<10} {'To':<10} {'Prev end (s)':<14} {'Next start (s)':<15} {'Gap'}")
    for ev in events:
        gap_ns = ev.gap_delta_s * 1e9
        raw_ns = (ev.next_start_index - ev.previous_end_index) / fs * 1e9
        print(
            f"{ev.from_waveform:<10} {ev.to_waveform:<10} "
            f"{ev.previous_end_s:<14.7f} {ev.next_start_s:<15.7f} "
            f"{gap_ns:.0f} ns (splice {raw_ns:.0f} ns)"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
