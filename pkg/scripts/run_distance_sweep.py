#!/usr/bin/env python3
"""Interferer-distance sweep on the scenario3 preset (airborne link).

Sweeps the interferer-receiver separation 20-100 m with continuous OFDM
interference and prints seed-averaged ASER and KLD per distance.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from stormbench.channel import load_scene
from stormbench.locate import default_scene_dir, default_waveform_dir
from stormbench.metrics import LinkConfig, collect_reference_preambles, run_link_trial
from stormbench.registry import WaveformRegistry, load_builtins
from stormbench.waveforms import BUILTIN_BINDINGS, GenContext


def main() -> int:
    fs = 250e3
    n_seeds = 8
    gain = 23.0
    scene3 = load_scene(default_scene_dir() / "scenario3.json")
    registry = WaveformRegistry()
    load_builtins(registry, default_waveform_dir())
    link = LinkConfig(modulation="QPSK", frame_payload_symbols=128, samples_per_symbol=4)
    ref = collect_reference_preambles(link, scene3, seed=11, sample_rate=fs)
    ctx = GenContext(sample_rate=fs)
    sweep = scene3.sweep
    distances = np.linspace(sweep["start"], sweep["stop"], int(sweep["points"]))

    print(f"interference: ofdm at gain {gain} dB, {n_seeds} seeds per distance\n")
    print(f"{'distance (m)':<14} {'ASER':<10} {'KLD (nats)'}")
    for d in distances:
        scene = scene3.with_interferer_distance(float(d))
        asers, klds = [], []
        for seed in range(n_seeds):
            gen = BUILTIN_BINDINGS["ofdm"].factory({"gain": gain, "seed": seed}, ctx)
            r = run_link_trial(
                link, gen, scene, 0.5, seed=seed, sample_rate=fs,
                reference_preambles=ref, window_s=0.5,
            )
            asers.append(np.mean([rec.aser for rec in r.records]))
            klds.append(np.mean([rec.kld for rec in r.records]))
        print(f"{d:<14.0f} {np.mean(asers):<10.3f} {np.mean(klds):.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
