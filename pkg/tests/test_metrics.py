import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfc

from stormbench.channel import ChannelModel, SceneConfig
from stormbench.core import get_constellation, map_bits
from stormbench.errors import ConfigurationError, InsufficientData
from stormbench.metrics import (
    AccessPreamble,
    LinkConfig,
    collect_reference_preambles,
    compute_aser,
    compute_kld,
    run_link_trial,
)
from stormbench.waveforms import BUILTIN_BINDINGS, GenContext

FS = 250e3


def flat_scene(noise_psd=0.0, int_model=None):
    return SceneConfig(
        "flat",
        ChannelModel(1.0, 2.0, noise_psd=noise_psd),
        int_model or ChannelModel(1.0, 2.0),
    )


# ---------------------------------------------------------------------------
# ASER


def test_aser_exact_preamble_is_zero():
    p = AccessPreamble()
    assert compute_aser(p.symbols, p) == 0.0


def test_aser_invariant_to_complex_gain():
    p = AccessPreamble()
    rx = p.symbols * (3.0 * np.exp(1j * 1.1))
    assert compute_aser(rx, p) == 0.0


@given(
    st.floats(min_value=0.05, max_value=20.0),
    st.floats(min_value=-math.pi, max_value=math.pi),
)
@settings(max_examples=40, deadline=None)
def test_aser_gain_invariance_property(mag, phase):
    p = AccessPreamble()
    rng = np.random.default_rng(1)
    noisy = p.symbols + 0.05 * (
        rng.standard_normal(len(p)) + 1j * rng.standard_normal(len(p))
    )
    base = compute_aser(noisy, p)
    scaled = compute_aser(noisy * mag * np.exp(1j * phase), p)
    assert scaled == base


def test_aser_length_mismatch():
    p = AccessPreamble()
    with pytest.raises(ValueError):
        compute_aser(p.symbols[:10], p)


def test_aser_qpsk_awgn_matches_closed_form():
    # Monte-Carlo oracle against the erfc-based QPSK SER at Es/N0 = 10 dB
    gamma = 10.0
    q_arg = math.sqrt(gamma / 2.0)
    ser_theory = erfc(q_arg) - 0.25 * erfc(q_arg) ** 2
    p = AccessPreamble()
    rng = np.random.default_rng(42)
    n_frames = 3000  # 192k symbol trials
    sigma = math.sqrt(1.0 / gamma / 2.0)
    errs = 0
    for _ in range(n_frames):
        noise = sigma * (rng.standard_normal(len(p)) + 1j * rng.standard_normal(len(p)))
        errs += compute_aser(p.symbols + noise, p) * len(p)
    ser_mc = errs / (n_frames * len(p))
    assert abs(ser_mc - ser_theory) / ser_theory < 0.10


# ---------------------------------------------------------------------------
# KLD


def test_kld_same_distribution_near_zero():
    rng = np.random.default_rng(0)
    n = 400_000
    a = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    b = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    assert compute_kld(a, b) < 0.01


@pytest.mark.parametrize("d", [0.5, 1.0])
def test_kld_gaussian_offset_closed_form(d):
    # per-axis unit variance, mean offset d -> analytic d^2/2 nats
    rng = np.random.default_rng(7)
    n = 400_000
    ref = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    rx = (rng.standard_normal(n) + d) + 1j * rng.standard_normal(n)
    est = compute_kld(rx, ref)
    true = d * d / 2.0
    assert abs(est - true) / true < 0.20


def test_kld_disjoint_support_bounded():
    # rx pushed entirely off-grid: large but bounded by the smoothing mass
    rng = np.random.default_rng(3)
    n = 20_000
    ref = np.exp(2j * np.pi * rng.random(n))  # unit-circle cloud
    rx = ref * 100.0  # clamps to edge bins
    bins, smoothing = 32, 1e-6
    kld = compute_kld(rx, ref, bins, smoothing)
    n_bins = bins * bins
    # every p-bin against the smoothing floor q_min = smoothing/(1 + B*s)
    bound = math.log((1.0 + n_bins * smoothing) / smoothing)
    assert 1.0 < kld < bound


def test_kld_asymmetry_is_expected():
    rng = np.random.default_rng(5)
    n = 200_000
    ref = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    rx = 2.0 * rng.standard_normal(n) + 1j * rng.standard_normal(n)
    assert compute_kld(rx, ref) != compute_kld(ref, rx)


def test_kld_nonnegative():
    rng = np.random.default_rng(6)
    for trial in range(5):
        a = rng.standard_normal(15_000) + 1j * rng.standard_normal(15_000)
        b = rng.standard_normal(15_000) + 1j * rng.standard_normal(15_000)
        assert compute_kld(a, b) >= 0.0


def test_kld_adequacy_precondition():
    with pytest.raises(InsufficientData):
        compute_kld(np.ones(100, complex), np.ones(100, complex))


# ---------------------------------------------------------------------------
# link trials


def test_clean_channel_full_throughput():
    link = LinkConfig()
    scene = flat_scene(noise_psd=1e-9 / FS)
    res = run_link_trial(link, None, scene, 2.0, seed=1, sample_rate=FS)
    frame_bits = link.frame_bits()
    for tput in res.throughput_bps:
        assert abs(tput - res.nominal_throughput_bps) <= frame_bits


def test_throughput_never_exceeds_offered_load():
    link = LinkConfig()
    scene = flat_scene(noise_psd=1e-9 / FS)
    res = run_link_trial(link, None, scene, 2.0, seed=2, sample_rate=FS)
    total = sum(res.throughput_bps) * res.window_s
    offered = int(2.0 * FS) // link.frame_samples() * link.frame_bits()
    assert total <= offered
    for tput in res.throughput_bps:
        assert tput <= res.nominal_throughput_bps + link.frame_bits()


def test_wideband_interference_collapses_throughput():
    link = LinkConfig()
    scene = flat_scene(noise_psd=1e-9 / FS)
    ref = collect_reference_preambles(link, scene, seed=5, sample_rate=FS)
    gen = BUILTIN_BINDINGS["ofdm"].factory({"gain": 10}, GenContext(sample_rate=FS))
    res = run_link_trial(
        link, gen, scene, 1.0, seed=5, sample_rate=FS, reference_preambles=ref
    )
    assert res.mean_throughput() <= 0.3 * res.nominal_throughput_bps
    assert all(r.aser > 0.05 for r in res.records)


def test_repetition_factor_trades_rate_for_robustness():
    # at a noise level that kills r=1 frames, majority-of-4 still delivers
    sigma2 = 4.0 / 4.2  # symbol Es/N0 ~ 6.2 dB after the sps-4 matched filter
    scene = flat_scene(noise_psd=sigma2 / FS)
    r1 = LinkConfig(repetition=1, frame_payload_symbols=64)
    r4 = LinkConfig(repetition=4, frame_payload_symbols=64)
    ref1 = collect_reference_preambles(r1, scene, seed=9, sample_rate=FS)
    ref4 = collect_reference_preambles(r4, scene, seed=9, sample_rate=FS)
    res1 = run_link_trial(r1, None, scene, 1.5, seed=9, sample_rate=FS, reference_preambles=ref1)
    res4 = run_link_trial(r4, None, scene, 1.5, seed=9, sample_rate=FS, reference_preambles=ref4)
    assert r4.nominal_throughput_bps(FS) < r1.nominal_throughput_bps(FS)
    frac1 = res1.mean_throughput() / res1.nominal_throughput_bps
    frac4 = res4.mean_throughput() / res4.nominal_throughput_bps
    assert frac4 > frac1 + 0.2


def test_repetition_factor_validation():
    with pytest.raises(ConfigurationError):
        LinkConfig(repetition=3)


def test_trial_reproducible_from_seeds():
    link = LinkConfig()
    scene = flat_scene(noise_psd=1e-3 / FS)
    ref = collect_reference_preambles(link, scene, seed=4, sample_rate=FS)
    gen_a = BUILTIN_BINDINGS["dsss"].factory({"gain": 8}, GenContext(sample_rate=FS))
    gen_b = BUILTIN_BINDINGS["dsss"].factory({"gain": 8}, GenContext(sample_rate=FS))
    a = run_link_trial(link, gen_a, scene, 1.0, seed=4, sample_rate=FS, reference_preambles=ref)
    b = run_link_trial(link, gen_b, scene, 1.0, seed=4, sample_rate=FS, reference_preambles=ref)
    assert a.throughput_bps == b.throughput_bps
    assert [r.aser for r in a.records] == [r.aser for r in b.records]
    assert [r.kld for r in a.records] == [r.kld for r in b.records]


def test_preamble_minimum_length():
    with pytest.raises(ConfigurationError):
        AccessPreamble(symbols=np.ones(8, complex))
