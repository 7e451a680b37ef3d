"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with:  pytest -v -s tests/test_acceptance.py
"""

import math
import sys
import time

import numpy as np
import pytest
from scipy.special import erfc

from stormbench.channel import ChannelModel, SceneConfig, load_scene, path_loss_db
from stormbench.core import IqBuffer, get_constellation, map_bits
from stormbench.locate import default_scene_dir, default_waveform_dir
from stormbench.metrics import (
    AccessPreamble,
    EngineSource,
    LinkConfig,
    collect_reference_preambles,
    compute_aser,
    compute_kld,
    run_link_trial,
)
from stormbench.monitor import compute_psd
from stormbench.orchestrator import ScheduleEntry, SchedulePlan, SessionEngine, discover_devices
from stormbench.power import PowerModel
from stormbench.registry import (
    ValidationReport,
    WaveformRegistry,
    load_builtins,
    validate_descriptor,
)
from stormbench.waveforms import (
    BUILTIN_BINDINGS,
    GenContext,
    OfdmConfig,
    OtfsConfig,
    SpreadConfig,
    despread,
    isfft,
    ofdm_demodulate,
    ofdm_modulate,
    otfs_demodulate,
    otfs_modulate,
    spread,
)


def checkpoint(name: str, ok: bool, detail: str = "") -> None:
    line = f"ACCEPTANCE {'PASS' if ok else 'FAIL'}: {name}"
    if detail:
        line += f" ({detail})"
    print(line, file=sys.stderr, flush=True)
    assert ok, line


@pytest.fixture(scope="module")
def registry():
    reg = WaveformRegistry()
    load_builtins(reg, default_waveform_dir())
    return reg


def make_engine(registry, **kw):
    eng = SessionEngine(registry, discover_devices(), **kw)
    eng.assign_role("sim-tx-eth0", "transmitter")
    eng.assign_role("sim-rx-usb0", "monitor")
    return eng


# ---------------------------------------------------------------------------


def test_seamless_switching(registry):
    """Scripted chain plus 1,000 randomized switches at 15.625 Msps: every
    gap <= one sample period (64 ns) and the stream stays contiguous."""
    t0 = time.time()
    fs = 15.625e6
    sample_period = 1.0 / fs
    assert sample_period == 64e-9

    eng = make_engine(registry, sample_rate=fs, buffer_len=4096)
    tap = eng.subscribe(maxlen=1_000_000)
    eng.start("baseline", {"symbol_rate": 976562.5})
    eng.run_for(8192)
    chain_gaps = []
    for wf in ("dsss", "ofdm", "otfs"):
        ev = eng.switch_waveform(wf, {})
        chain_gaps.append(ev)
        eng.run_for(8192)
    ok = all(
        ev.gap_delta_s <= sample_period
        and (ev.next_start_index - ev.previous_end_index) * sample_period <= 64e-9 + 1e-18
        for ev in chain_gaps
    )
    bufs = tap.poll()
    ok = ok and all(b.follows(a) for a, b in zip(bufs, bufs[1:]))

    # 1,000 randomized switches across 50 random sequences; per-waveform
    # params sized for the 15.625 Msps session
    rng = np.random.default_rng(2024)
    pool = {
        "baseline": {"symbol_rate": 976562.5},
        "baseline_direct": {"symbol_rate": 976562.5},
        "am": {},
        "fm": {},
        "freq_hop": {"symbol_rate": fs / 128, "dwell": 0.002},
        "freq_sweep": {},
        "dsss": {},
        "ofdm": {},
        "otfs": {},
    }
    names = sorted(pool)
    n_switches = 0
    for _ in range(50):
        eng2 = make_engine(registry, sample_rate=fs, buffer_len=2048)
        tap2 = eng2.subscribe(maxlen=10_000)
        eng2.start("baseline", {"symbol_rate": 976562.5})
        eng2.run_for(2048)
        for _ in range(20):
            wf = names[rng.integers(0, len(names))]
            ev = eng2.switch_waveform(wf, pool[wf])
            n_switches += 1
            ok = ok and ev.next_start_index - ev.previous_end_index == 1
            ok = ok and ev.gap_delta_s <= sample_period
            eng2.run_for(2048)
        bufs = tap2.poll()
        ok = ok and all(b.follows(a) for a, b in zip(bufs, bufs[1:]))
    elapsed = time.time() - t0
    checkpoint(
        "seamless switching (gap <= 64 ns, 1000 randomized switches)",
        ok and n_switches == 1000 and elapsed < 60,
        f"{n_switches} switches, {elapsed:.1f}s",
    )


def test_duty_cycle_collapse(registry):
    """Scenario1 QPSK link under 5 s on/off OFDM interference for 60 s:
    on-window throughput <= 30% of off-window, boundaries sample-exact."""
    t0 = time.time()
    fs = 250e3
    scene = load_scene(default_scene_dir() / "scenario1.json")
    gain_db = 10.0

    # preset SIR at the receiver (unit link tx power, tap energies ~1)
    sir_db = (
        -path_loss_db(scene.tx_rx)
        + path_loss_db(scene.interferer_rx)
        - gain_db
        + 10 * math.log10(scene.tx_rx.tap_energy() / scene.interferer_rx.tap_energy())
    )
    assert sir_db <= 0.0

    eng = make_engine(registry, sample_rate=fs, buffer_len=4096)
    plan = SchedulePlan(
        (ScheduleEntry("ofdm", {"gain": gain_db}, on_s=5.0, off_s=5.0, repeat=6),)
    )
    eng.load_schedule(plan)

    link = LinkConfig(modulation="QPSK", frame_payload_symbols=128, samples_per_symbol=4)
    ref = collect_reference_preambles(link, scene, seed=1, sample_rate=fs)
    result = run_link_trial(
        link,
        EngineSource(eng),
        scene,
        60.0,
        seed=1,
        sample_rate=fs,
        reference_preambles=ref,
    )
    while eng.schedule_active():  # the trial consumed exactly 60 s; finalize
        eng.step()
    sched = eng.last_schedule_result()
    on_n = int(5.0 * fs)
    boundaries_ok = all(b["index"] == k * on_n for k, b in enumerate(sched.boundaries))

    tput = np.array(result.throughput_bps)
    on_windows = [w for w in range(60) if (w // 5) % 2 == 0]
    off_windows = [w for w in range(60) if (w // 5) % 2 == 1]
    on_mean = tput[on_windows].mean()
    off_mean = tput[off_windows].mean()
    elapsed = time.time() - t0
    checkpoint(
        "duty-cycle collapse (on <= 30% of off, boundaries exact)",
        boundaries_ok and on_mean <= 0.30 * off_mean and elapsed < 120,
        f"SIR {sir_db:.1f} dB, on {on_mean:.0f} bps, off {off_mean:.0f} bps, {elapsed:.1f}s",
    )


def test_waveform_ordering(registry):
    """Equal received interference power: narrowband baseline leaves >= 60%
    relative throughput, every wideband waveform leaves <= 40% (10 seeds)."""
    t0 = time.time()
    fs = 250e3
    scene = SceneConfig(
        "ordering",
        ChannelModel(1.0, 2.0, noise_psd=10**-2.5 / fs),  # link SNR 25 dB
        ChannelModel(1.0, 2.0),
    )
    # narrowband link; the baseline interferer sits at its minimal-overlap
    # offset while wideband waveforms cover the whole channel
    link = LinkConfig(modulation="QPSK", frame_payload_symbols=128, samples_per_symbol=16)
    ref = collect_reference_preambles(link, scene, seed=7, sample_rate=fs)
    ctx = GenContext(sample_rate=fs)
    gain = 15.0
    configs = {
        "baseline": {
            "gain": gain,
            "center_frequency": ctx.center_frequency + 80e3,
            "symbol_rate": 15625,
        },
        "dsss": {"gain": gain},
        "ofdm": {"gain": gain},
        "otfs": {"gain": gain},
    }
    clean_tput = {}
    for seed in range(10):
        clean = run_link_trial(
            link, None, scene, 0.4, seed=seed, sample_rate=fs,
            reference_preambles=ref, window_s=0.4,
        )
        clean_tput[seed] = clean.mean_throughput()
    rel = {}
    for name, params in configs.items():
        fractions = []
        for seed in range(10):
            p = dict(params)
            if name != "baseline":
                p["seed"] = seed
            gen = BUILTIN_BINDINGS[name].factory(p, ctx)
            jammed = run_link_trial(
                link, gen, scene, 0.4, seed=seed, sample_rate=fs,
                reference_preambles=ref, window_s=0.4,
            )
            fractions.append(jammed.mean_throughput() / clean_tput[seed])
        rel[name] = float(np.mean(fractions))
    ok = rel["baseline"] >= 0.60 and all(rel[w] <= 0.40 for w in ("dsss", "ofdm", "otfs"))
    elapsed = time.time() - t0
    checkpoint(
        "waveform ordering (narrowband >= 60%, wideband <= 40%)",
        ok,
        ", ".join(f"{k}={v:.2f}" for k, v in rel.items()) + f", {elapsed:.1f}s",
    )


def test_aser_distance_trend(registry):
    """Scenario3 interferer sweep 20-100 m: seed-averaged ASER monotone
    non-increasing, >= 20% at 20 m, < 5% at 100 m."""
    t0 = time.time()
    fs = 250e3
    scene3 = load_scene(default_scene_dir() / "scenario3.json")
    link = LinkConfig(modulation="QPSK", frame_payload_symbols=128, samples_per_symbol=4)
    ref = collect_reference_preambles(link, scene3, seed=11, sample_rate=fs)
    ctx = GenContext(sample_rate=fs)
    sweep = scene3.sweep
    distances = np.linspace(sweep["start"], sweep["stop"], int(sweep["points"]))
    gain = 23.0
    n_seeds = 8
    asers = []
    for d in distances:
        scene = scene3.with_interferer_distance(float(d))
        vals = []
        for seed in range(n_seeds):
            gen = BUILTIN_BINDINGS["ofdm"].factory({"gain": gain, "seed": seed}, ctx)
            r = run_link_trial(
                link, gen, scene, 0.35, seed=seed, sample_rate=fs,
                reference_preambles=ref, window_s=0.35,
            )
            vals.append(np.mean([rec.aser for rec in r.records]))
        asers.append(float(np.mean(vals)))
    monotone = all(b <= a + 0.015 for a, b in zip(asers, asers[1:]))
    ok = monotone and asers[0] >= 0.20 and asers[-1] < 0.05
    elapsed = time.time() - t0
    checkpoint(
        "ASER distance trend (monotone, >=20% at 20 m, <5% at 100 m)",
        ok and elapsed < 120,
        "ASER " + ", ".join(f"{a:.3f}" for a in asers) + f", {elapsed:.1f}s",
    )


def test_kld_behavior(registry):
    """Identical distributions < 0.01 nats; monotone non-decreasing in
    interference gain 5-25 dB; Gaussian-offset estimator within 20% of
    d^2/2 for d in {0.5, 1.0}."""
    t0 = time.time()
    rng = np.random.default_rng(0)
    n = 400_000
    a = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    b = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    same_ok = compute_kld(a, b) < 0.01

    gauss_ok = True
    for d in (0.5, 1.0):
        ref = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        rx = (rng.standard_normal(n) + d) + 1j * rng.standard_normal(n)
        est = compute_kld(rx, ref)
        gauss_ok = gauss_ok and abs(est - d * d / 2) / (d * d / 2) < 0.20

    fs = 250e3
    scene = SceneConfig(
        "gain-sweep",
        ChannelModel(1.0, 2.0, noise_psd=1e-2 / fs),
        ChannelModel(10.0, 2.0),
    )
    link = LinkConfig()
    ref_cloud = collect_reference_preambles(link, scene, seed=2, sample_rate=fs)
    ctx = GenContext(sample_rate=fs)
    gains = (5.0, 10.0, 15.0, 20.0, 25.0)
    klds, asers = [], []
    for gain in gains:
        kv, av = [], []
        for seed in range(10):
            gen = BUILTIN_BINDINGS["ofdm"].factory({"gain": gain, "seed": seed}, ctx)
            r = run_link_trial(
                link, gen, scene, 0.5, seed=seed, sample_rate=fs,
                reference_preambles=ref_cloud, window_s=0.5,
            )
            kv.append(r.records[0].kld)
            av.append(r.records[0].aser)
        klds.append(float(np.mean(kv)))
        asers.append(float(np.mean(av)))
    kld_monotone = all(b >= a - 0.05 * max(a, 1e-9) for a, b in zip(klds, klds[1:]))
    aser_monotone = all(b >= a - 0.005 for a, b in zip(asers, asers[1:]))
    elapsed = time.time() - t0
    checkpoint(
        "KLD behavior (identity, gain monotonicity, Gaussian closed form)",
        same_ok and gauss_ok and kld_monotone and aser_monotone,
        "KLD " + ", ".join(f"{k:.2f}" for k in klds) + f", {elapsed:.1f}s",
    )


def test_modulation_oracle():
    """QPSK ASER over AWGN at Es/N0 = 10 dB within 10% relative of the
    closed-form SER, >= 1e5 trials, < 30 s."""
    t0 = time.time()
    gamma = 10.0
    q_arg = math.sqrt(gamma / 2.0)
    ser_theory = erfc(q_arg) - 0.25 * erfc(q_arg) ** 2
    preamble = AccessPreamble()
    rng = np.random.default_rng(42)
    n_frames = 3000  # 192,000 symbol trials
    sigma = math.sqrt(1.0 / gamma / 2.0)
    errs = 0.0
    for _ in range(n_frames):
        noise = sigma * (
            rng.standard_normal(len(preamble)) + 1j * rng.standard_normal(len(preamble))
        )
        errs += compute_aser(preamble.symbols + noise, preamble) * len(preamble)
    ser_mc = errs / (n_frames * len(preamble))
    rel = abs(ser_mc - ser_theory) / ser_theory
    elapsed = time.time() - t0
    checkpoint(
        "modulation oracle (QPSK ASER vs closed-form SER at 10 dB)",
        rel < 0.10 and n_frames * len(preamble) >= 1e5 and elapsed < 30,
        f"mc {ser_mc:.3e} vs theory {ser_theory:.3e}, rel {rel:.2%}, {elapsed:.1f}s",
    )


def test_transform_suite():
    """OFDM/OTFS round trips to 1e-9, ISFFT energy to 1e-9, constellations
    to 1e-12, despread-spread identity, PSD Parseval within 3%."""
    rng = np.random.default_rng(5)
    ok = True

    ocfg = OfdmConfig(64, 16)
    grid = rng.standard_normal((30, 64)) + 1j * rng.standard_normal((30, 64))
    grid[:, 0] = 0.0
    ok &= np.max(np.abs(ofdm_demodulate(ofdm_modulate(grid, ocfg), ocfg) - grid)) < 1e-9

    tcfg = OtfsConfig(64, 16, 16)
    dd = rng.standard_normal((64, 16)) + 1j * rng.standard_normal((64, 16))
    ok &= np.max(np.abs(otfs_demodulate(otfs_modulate(dd, tcfg), tcfg) - dd)) < 1e-9
    tf = isfft(dd, tcfg)
    ok &= abs(np.sum(np.abs(tf) ** 2) - np.sum(np.abs(dd) ** 2)) < 1e-9

    for mod in ("BPSK", "QPSK", "8QAM", "16QAM", "64QAM"):
        pts = get_constellation(mod).points
        ok &= abs(np.mean(np.abs(pts) ** 2) - 1.0) < 1e-12

    scfg = SpreadConfig(31, 3)
    syms = map_bits(rng.integers(0, 2, 2 * 400), get_constellation("QPSK"))
    ok &= np.allclose(despread(spread(syms, scfg), scfg), syms, atol=1e-12)

    x = rng.standard_normal(200_000) + 1j * rng.standard_normal(200_000)
    x /= np.sqrt(np.mean(np.abs(x) ** 2))
    frame = compute_psd(IqBuffer(x, 1e6), fft_size=1024)
    ok &= abs(frame.total_power() - 1.0) < 0.03

    checkpoint("transform suite (round trips, energy, unit power, Parseval)", bool(ok))


def test_registry_suite(registry):
    """Shipped descriptors validate; k faults -> exactly k violations;
    70 MHz-6 GHz and 5-25 dB ranges enforced."""
    ok = True
    paths = sorted(default_waveform_dir().glob("*.json"))
    ok &= len(paths) == 9
    for p in paths:
        ok &= not isinstance(validate_descriptor(p.read_text()), ValidationReport)

    doc = {
        "schema_version": 1,
        "category": "ultrawideband",  # fault 1
        "execution_mode": "direct_graph",
        "parameters": [
            {
                "name": "center_frequency",
                "kind": "float",
                "range": [70e6, 6e9],
                "units": "Hz",
                "default": 7e9,  # fault 2
            },
            {"name": "gain", "kind": "float", "range": [25, 5], "units": "dB", "default": 10},
            # fault 3: min > max
        ],
    }  # fault 4: waveform_name missing
    rep = validate_descriptor(doc)
    ok &= isinstance(rep, ValidationReport) and len(rep.violations) == 4

    r1 = registry.validate_params("baseline", {"center_frequency": 7.0e9})
    r2 = registry.validate_params("baseline", {"center_frequency": 60e6})
    r3 = registry.validate_params("baseline", {"gain": 26})
    r4 = registry.validate_params("baseline", {"gain": 4.9})
    for r in (r1, r2, r3, r4):
        ok &= isinstance(r, ValidationReport) and r.codes() == ["RangeViolation"]
    ok &= registry.validate_params("baseline", {"center_frequency": 70e6, "gain": 25})[
        "gain"
    ] == 25.0
    checkpoint("registry suite (descriptors, k-fault exactness, platform ranges)", bool(ok))


def test_pause_resume_and_mode_equivalence(registry):
    """Pause/resume bit-identity; Mode 1 / Mode 2 baseline sample-identity."""
    params = {"modulation": "QPSK", "symbol_rate": 62500}

    def collect(eng, n):
        out = []
        target = eng.stream_clock + n
        while eng.stream_clock < target:
            out.append(eng.step().samples)
        return np.concatenate(out)

    eng = make_engine(registry, buffer_len=1024)
    eng.start("baseline", params)
    first = collect(eng, 10_240)
    eng.pause()
    eng.resume()
    second = collect(eng, 10_240)
    eng2 = make_engine(registry, buffer_len=1024)
    eng2.start("baseline", params)
    uninterrupted = collect(eng2, 20_480)
    pause_ok = np.array_equal(np.concatenate([first, second]), uninterrupted)

    streams = []
    for wf in ("baseline", "baseline_direct"):
        eng3 = make_engine(registry, buffer_len=2048)
        eng3.start(wf, params)
        streams.append(collect(eng3, 30_720))
    mode_ok = np.array_equal(streams[0], streams[1])
    checkpoint("pause/resume bit-identity and Mode 1/Mode 2 equivalence", pause_ok and mode_ok)


def test_power_model():
    """Fresh battery at default load reads 7200 +/- 1 s."""
    status = PowerModel().status()
    checkpoint(
        "power model (fresh battery reads 7200 s)",
        abs(status.estimated_runtime_s - 7200.0) <= 1.0 and status.battery_fraction == 1.0,
        f"{status.estimated_runtime_s:.1f}s",
    )
