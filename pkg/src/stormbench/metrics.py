"""I/Q-based evaluation: access-symbol error rate, KL divergence, and
frame-level throughput trials.

The link under test is a pulse-shaped single-carrier stream of frames, each
headed by a fixed known preamble. Reception is genie-timed (known symbol
instants) with per-frame single-tap least-squares equalization, so the
metrics isolate interference effects from synchronization algorithms. An
optional per-frame repetition factor (1, 2, or 4) with bitwise majority
voting stands in for adaptive coding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from .core import (
    Constellation,
    IqBuffer,
    get_constellation,
    map_bits,
    rrc_taps,
)
from .channel import SceneConfig, receive
from .errors import ConfigurationError, InsufficientData
from .waveforms.base import BlockFir


def _default_preamble_symbols(length: int = 64, seed: int = 0xACCE55) -> np.ndarray:
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, 2 * length)
    return map_bits(bits, get_constellation("QPSK"))


@dataclass(frozen=True)
class AccessPreamble:
    """Known symbol sequence heading every frame."""

    symbols: np.ndarray = field(default_factory=_default_preamble_symbols)
    constellation: Constellation = field(default_factory=lambda: get_constellation("QPSK"))

    def __post_init__(self) -> None:
        arr = np.asarray(self.symbols, dtype=np.complex128)
        if len(arr) < 16:
            raise ConfigurationError("preamble must hold at least 16 symbols")
        arr.setflags(write=False)
        object.__setattr__(self, "symbols", arr)

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class MetricsRecord:
    timestamp: float
    aser: float
    kld: float
    throughput_bps: float
    context: Mapping[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "aser": self.aser,
            "kld": self.kld,
            "throughput_bps": self.throughput_bps,
            "context": dict(self.context),
        }


def estimate_gain(rx: np.ndarray, known: np.ndarray) -> complex:
    """Least-squares single complex coefficient fitting rx ~= h * known."""
    denom = np.vdot(known, known)
    if denom == 0:
        return 1.0 + 0j
    return complex(np.vdot(known, rx) / denom)


def compute_aser(rx: np.ndarray, preamble: AccessPreamble) -> float:
    """Fraction of preamble symbols decided incorrectly after the LS gain
    estimate removes any global complex scale."""
    rx = np.asarray(rx, dtype=np.complex128)
    if len(rx) != len(preamble):
        raise ValueError(f"rx length {len(rx)} != preamble length {len(preamble)}")
    h = estimate_gain(rx, preamble.symbols)
    if h == 0:
        return 1.0
    y = rx / h
    decided = preamble.constellation.decide(y)
    truth = preamble.constellation.decide(preamble.symbols)
    return float(np.mean(decided != truth))


def compute_kld(
    rx_iq: IqBuffer | np.ndarray,
    ref_iq: IqBuffer | np.ndarray,
    bins_per_axis: int = 32,
    smoothing: float = 1e-6,
) -> float:
    """D(P_rx || Q_ref) in nats from 2-D I/Q histograms.

    Histograms span [-R, R]^2 with R = 4x the reference RMS; out-of-range
    samples clamp to edge bins; every bin receives ``smoothing`` probability
    mass before renormalization.
    """
    rx = rx_iq.samples if isinstance(rx_iq, IqBuffer) else np.asarray(rx_iq, np.complex128)
    ref = ref_iq.samples if isinstance(ref_iq, IqBuffer) else np.asarray(ref_iq, np.complex128)
    need = 10 * bins_per_axis**2
    if len(rx) < need or len(ref) < need:
        raise InsufficientData(f"need >= {need} samples per buffer for {bins_per_axis} bins")
    r = 4.0 * math.sqrt(float(np.mean(np.abs(ref) ** 2)))
    if r == 0:
        raise InsufficientData("reference buffer has zero power")
    edges = np.linspace(-r, r, bins_per_axis + 1)

    def hist(z: np.ndarray) -> np.ndarray:
        i = np.clip(z.real, -r, r)
        q = np.clip(z.imag, -r, r)
        h, _, _ = np.histogram2d(i, q, bins=[edges, edges])
        p = h.ravel() / h.sum()
        p = p + smoothing
        return p / p.sum()

    p = hist(rx)
    q = hist(ref)
    return float(np.sum(p * np.log(p / q)))


# ---------------------------------------------------------------------------
# link trials


@dataclass(frozen=True)
class LinkConfig:
    """Modulation, framing, and coding of the link under test."""

    modulation: str = "QPSK"
    frame_payload_symbols: int = 128
    samples_per_symbol: int = 4
    rolloff: float = 0.35
    span: int = 8
    repetition: int = 1  # 1, 2, or 4: payload symbols repeated, majority vote
    seed: int = 0
    preamble: AccessPreamble = field(default_factory=AccessPreamble)

    def __post_init__(self) -> None:
        if self.repetition not in (1, 2, 4):
            raise ConfigurationError("repetition factor must be 1, 2, or 4")
        if self.frame_payload_symbols < 1:
            raise ConfigurationError("frame_payload_symbols must be >= 1")
        if self.samples_per_symbol < 2:
            raise ConfigurationError("samples_per_symbol must be >= 2")

    @property
    def constellation(self) -> Constellation:
        return get_constellation(self.modulation)

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "LinkConfig":
        known = (
            "modulation",
            "frame_payload_symbols",
            "samples_per_symbol",
            "rolloff",
            "span",
            "repetition",
            "seed",
        )
        return cls(**{k: doc[k] for k in known if k in doc})

    def to_dict(self) -> dict:
        return {
            "modulation": self.modulation,
            "frame_payload_symbols": self.frame_payload_symbols,
            "samples_per_symbol": self.samples_per_symbol,
            "rolloff": self.rolloff,
            "span": self.span,
            "repetition": self.repetition,
            "seed": self.seed,
        }

    @property
    def frame_symbols(self) -> int:
        return len(self.preamble) + self.frame_payload_symbols * self.repetition

    def frame_samples(self) -> int:
        return self.frame_symbols * self.samples_per_symbol

    def frame_bits(self) -> int:
        return self.frame_payload_symbols * self.constellation.bits_per_symbol

    def nominal_throughput_bps(self, sample_rate: float) -> float:
        frames_per_s = sample_rate / self.frame_samples()
        return frames_per_s * self.frame_bits()


class SampleSource:
    """Adapter pulling interference samples aligned to the trial clock."""

    def __init__(self, source: np.ndarray | Callable[[int], np.ndarray] | Any | None):
        self._array: np.ndarray | None = None
        self._fn: Callable[[int], np.ndarray] | None = None
        self._pos = 0
        if source is None:
            self._fn = lambda n: np.zeros(n, dtype=np.complex128)
        elif isinstance(source, np.ndarray):
            self._array = np.asarray(source, dtype=np.complex128)
        elif callable(source):
            self._fn = source
        elif hasattr(source, "generate"):
            self._fn = source.generate
        else:
            raise ConfigurationError(f"unusable interference source: {type(source)}")

    def take(self, n: int) -> np.ndarray:
        if self._array is not None:
            end = self._pos + n
            chunk = self._array[self._pos : end]
            self._pos = end
            if len(chunk) < n:
                chunk = np.concatenate([chunk, np.zeros(n - len(chunk), np.complex128)])
            return chunk
        return self._fn(n)


class EngineSource:
    """Pulls the orchestrator's emitted stream as trial interference."""

    def __init__(self, engine):
        self.engine = engine
        self._carry = np.zeros(0, dtype=np.complex128)

    def take(self, n: int) -> np.ndarray:
        parts = [self._carry]
        have = len(self._carry)
        while have < n:
            buf = self.engine.step()
            if buf is None:
                parts.append(np.zeros(n - have, dtype=np.complex128))
                have = n
                break
            parts.append(buf.samples)
            have += len(buf.samples)
        flat = np.concatenate(parts)
        self._carry = flat[n:]
        return flat[:n]


@dataclass
class TrialResult:
    window_s: float
    nominal_throughput_bps: float
    throughput_bps: list[float]
    records: list[MetricsRecord]

    def mean_throughput(self, windows: list[int] | None = None) -> float:
        vals = self.throughput_bps if windows is None else [self.throughput_bps[i] for i in windows]
        return float(np.mean(vals)) if vals else 0.0


class _FrameDemodulator:
    """Genie-timed matched filter and symbol extraction with streaming state."""

    def __init__(self, link: LinkConfig):
        sps = link.samples_per_symbol
        taps = rrc_taps(sps, link.span, link.rolloff)
        self.tx_fir = BlockFir(taps * math.sqrt(sps))
        self.rx_fir = BlockFir(taps / math.sqrt(sps))
        self.delay = len(taps) - 1  # tx + rx filter group delay, samples
        self.sps = sps
        self.next_symbol = 0
        self.produced = 0

    def extract(self, mf_chunk: np.ndarray) -> np.ndarray:
        """Symbols whose instants fall inside this matched-filtered chunk."""
        start = self.produced
        end = start + len(mf_chunk)
        self.produced = end
        first_idx = self.next_symbol * self.sps + self.delay
        if first_idx >= end:
            return np.zeros(0, dtype=np.complex128)
        count = (end - 1 - first_idx) // self.sps + 1
        rel = first_idx - start + self.sps * np.arange(count)
        self.next_symbol += count
        return mf_chunk[rel]


def _majority_combine(labels: np.ndarray, soft: np.ndarray, constellation) -> np.ndarray:
    """Bitwise majority over repetition copies; ties decided by the soft mean."""
    r = labels.shape[1]
    if r == 1:
        return labels[:, 0]
    bps = constellation.bits_per_symbol
    bits = (labels[:, :, None] >> np.arange(bps - 1, -1, -1)[None, None, :]) & 1
    votes = bits.sum(axis=1)
    out = np.where(votes * 2 > r, 1, 0)
    tie = votes * 2 == r
    if np.any(tie):
        mean_dec = constellation.decide_labels(soft.mean(axis=1))
        mean_bits = (mean_dec[:, None] >> np.arange(bps - 1, -1, -1)[None, :]) & 1
        out = np.where(tie, mean_bits, out)
    weights = 1 << np.arange(bps - 1, -1, -1)
    return (out * weights[None, :]).sum(axis=1)


def run_link_trial(
    link: LinkConfig,
    interference: Any,
    scene: SceneConfig,
    duration_s: float,
    seed: int = 0,
    *,
    sample_rate: float = 250e3,
    window_s: float = 1.0,
    context: Mapping[str, Any] | None = None,
    kld_bins: int = 32,
    kld_smoothing: float = 1e-6,
    reference_preambles: np.ndarray | None = None,
    frames_per_batch: int = 64,
    on_rx: Callable[[IqBuffer], None] | None = None,
) -> TrialResult:
    """Frame-by-frame link trial through the simulated channel.

    A frame is delivered iff every payload symbol decides correctly after
    repetition combining; throughput is delivered bits per window. ASER and
    KLD come from the preamble symbols at each frame head, the KLD reference
    being an interference-free pass over the same link.
    """
    if reference_preambles is None:
        reference_preambles = collect_reference_preambles(
            link, scene, seed, sample_rate, min_symbols=10 * kld_bins**2
        )

    const = link.constellation
    bps = const.bits_per_symbol
    pre_len = len(link.preamble)
    r = link.repetition
    f_pay = link.frame_payload_symbols
    frame_syms = link.frame_symbols
    frame_n = link.frame_samples()
    n_frames = int(duration_s * sample_rate) // frame_n
    window_n = int(round(window_s * sample_rate))
    n_windows = max(1, int(math.ceil(n_frames * frame_n / window_n)))

    rng = np.random.default_rng(link.seed)
    demod = _FrameDemodulator(link)
    source = interference if hasattr(interference, "take") else SampleSource(interference)

    delivered_bits = np.zeros(n_windows)
    aser_sums = np.zeros(n_windows)
    frame_counts = np.zeros(n_windows, dtype=int)
    kld_rx: list[list[np.ndarray]] = [[] for _ in range(n_windows)]

    sym_buffer = np.zeros(0, dtype=np.complex128)
    frames_done = 0
    chunk_idx = 0
    truth_queue: list[np.ndarray] = []

    while frames_done < n_frames:
        batch = min(frames_per_batch, n_frames - frames_done)
        # build batch symbols: preamble + repeated payload per frame
        pay_labels = rng.integers(0, 2, (batch, f_pay * bps))
        syms = np.empty((batch, frame_syms), dtype=np.complex128)
        truths = np.empty((batch, f_pay), dtype=np.int64)
        for b in range(batch):
            info = map_bits(pay_labels[b], const)
            truths[b] = const.decide_labels(info)
            syms[b, :pre_len] = link.preamble.symbols
            syms[b, pre_len:] = np.repeat(info, r)
        truth_queue.append(truths)
        up = np.zeros(batch * frame_syms * link.samples_per_symbol, dtype=np.complex128)
        up[:: link.samples_per_symbol] = syms.ravel()
        tx = demod.tx_fir.process(up)
        start_ts = frames_done * frame_n
        link_buf = IqBuffer(tx, sample_rate, start_ts)
        int_chunk = source.take(len(tx))
        int_buf = IqBuffer(int_chunk, sample_rate, start_ts)
        rx = receive(link_buf, int_buf, scene, seed=seed + 7919 * chunk_idx)
        if on_rx is not None:
            on_rx(rx)
        mf = demod.rx_fir.process(rx.samples)
        sym_buffer = np.concatenate([sym_buffer, demod.extract(mf)])
        frames_done += batch
        chunk_idx += 1

    # flush the filter delay so trailing symbols emerge
    tail_n = 4 * demod.delay + 4 * link.samples_per_symbol
    tx = demod.tx_fir.process(np.zeros(tail_n, dtype=np.complex128))
    int_buf = IqBuffer(source.take(tail_n), sample_rate, frames_done * frame_n)
    rx = receive(IqBuffer(tx, sample_rate, frames_done * frame_n), int_buf, scene, seed=seed + 32452843)
    sym_buffer = np.concatenate([sym_buffer, demod.extract(demod.rx_fir.process(rx.samples))])

    truths_all = np.concatenate(truth_queue, axis=0) if truth_queue else np.zeros((0, f_pay), int)
    for k in range(n_frames):
        fsyms = sym_buffer[k * frame_syms : (k + 1) * frame_syms]
        if len(fsyms) < frame_syms:
            break
        w = min(k * frame_n // window_n, n_windows - 1)
        rx_pre = fsyms[:pre_len]
        aser_sums[w] += compute_aser(rx_pre, link.preamble)
        frame_counts[w] += 1
        kld_rx[w].append(rx_pre)
        h = estimate_gain(rx_pre, link.preamble.symbols)
        if h == 0:
            continue
        payload = (fsyms[pre_len:] / h).reshape(f_pay, r)
        labels = const.decide_labels(payload.ravel()).reshape(f_pay, r)
        decided = _majority_combine(labels, payload, const)
        if np.array_equal(decided, truths_all[k]):
            delivered_bits[w] += link.frame_bits()

    ctx = dict(context or {})
    ctx.setdefault("scene", scene.label)
    ctx.setdefault("interferer_distance_m", scene.interferer_rx.distance)
    ctx.setdefault("link_modulation", link.modulation)
    records = []
    throughput = []
    for w in range(n_windows):
        tput = delivered_bits[w] / window_s
        throughput.append(tput)
        aser = aser_sums[w] / frame_counts[w] if frame_counts[w] else 0.0
        rx_cloud = np.concatenate(kld_rx[w]) if kld_rx[w] else np.zeros(0, np.complex128)
        try:
            kld = compute_kld(rx_cloud, reference_preambles, kld_bins, kld_smoothing)
        except InsufficientData:
            kld = float("nan")
        records.append(
            MetricsRecord(
                timestamp=w * window_s,
                aser=float(aser),
                kld=kld,
                throughput_bps=float(tput),
                context=ctx,
            )
        )
    return TrialResult(
        window_s=window_s,
        nominal_throughput_bps=link.nominal_throughput_bps(sample_rate),
        throughput_bps=throughput,
        records=records,
    )


def analyze_rx_capture(
    link: LinkConfig,
    rx: IqBuffer,
    reference_preambles: np.ndarray,
    *,
    window_s: float = 1.0,
    context: Mapping[str, Any] | None = None,
    kld_bins: int = 32,
    kld_smoothing: float = 1e-6,
) -> list[MetricsRecord]:
    """Recompute per-window ASER/KLD/throughput from a captured rx stream.

    The capture must start at the link stream's epoch (sample index 0), as
    the headless runner's head captures do; payload truth is regenerated from
    the link seed, so delivered-frame accounting matches the original trial.
    """
    if rx.start_timestamp != 0:
        raise ConfigurationError("capture analysis requires a stream-epoch capture")
    const = link.constellation
    bps = const.bits_per_symbol
    pre_len = len(link.preamble)
    r = link.repetition
    f_pay = link.frame_payload_symbols
    frame_syms = link.frame_symbols
    frame_n = link.frame_samples()
    sps = link.samples_per_symbol
    taps = rrc_taps(sps, link.span, link.rolloff)
    delay = len(taps) - 1
    mf = np.convolve(rx.samples, taps / math.sqrt(sps))
    n_frames = max(0, (len(mf) - delay) // frame_n - 1)
    window_n = int(round(window_s * rx.sample_rate))
    n_windows = max(1, int(math.ceil(n_frames * frame_n / window_n)))

    rng = np.random.default_rng(link.seed)
    delivered = np.zeros(n_windows)
    aser_sums = np.zeros(n_windows)
    counts = np.zeros(n_windows, dtype=int)
    clouds: list[list[np.ndarray]] = [[] for _ in range(n_windows)]
    for k in range(n_frames):
        pay_bits = rng.integers(0, 2, f_pay * bps)
        info = map_bits(pay_bits, const)
        truth = const.decide_labels(info)
        idx = delay + (k * frame_syms + np.arange(frame_syms)) * sps
        fsyms = mf[idx]
        w = min(k * frame_n // window_n, n_windows - 1)
        rx_pre = fsyms[:pre_len]
        aser_sums[w] += compute_aser(rx_pre, link.preamble)
        counts[w] += 1
        clouds[w].append(rx_pre)
        h = estimate_gain(rx_pre, link.preamble.symbols)
        if h == 0:
            continue
        payload = (fsyms[pre_len:] / h).reshape(f_pay, r)
        labels = const.decide_labels(payload.ravel()).reshape(f_pay, r)
        if np.array_equal(_majority_combine(labels, payload, const), truth):
            delivered[w] += link.frame_bits()

    ctx = dict(context or {})
    records = []
    for w in range(n_windows):
        cloud = np.concatenate(clouds[w]) if clouds[w] else np.zeros(0, np.complex128)
        try:
            kld = compute_kld(cloud, reference_preambles, kld_bins, kld_smoothing)
        except InsufficientData:
            kld = float("nan")
        records.append(
            MetricsRecord(
                timestamp=w * window_s,
                aser=float(aser_sums[w] / counts[w]) if counts[w] else 0.0,
                kld=kld,
                throughput_bps=float(delivered[w] / window_s),
                context=ctx,
            )
        )
    return records


def preamble_cloud_from_rx(link: LinkConfig, rx: IqBuffer) -> np.ndarray:
    """All received preamble symbols from a stream-epoch capture."""
    if rx.start_timestamp != 0:
        raise ConfigurationError("capture analysis requires a stream-epoch capture")
    sps = link.samples_per_symbol
    taps = rrc_taps(sps, link.span, link.rolloff)
    delay = len(taps) - 1
    mf = np.convolve(rx.samples, taps / math.sqrt(sps))
    frame_syms = link.frame_symbols
    n_frames = max(0, (len(mf) - delay) // link.frame_samples() - 1)
    pre_len = len(link.preamble)
    out = []
    for k in range(n_frames):
        idx = delay + (k * frame_syms + np.arange(pre_len)) * sps
        out.append(mf[idx])
    return np.concatenate(out) if out else np.zeros(0, np.complex128)


def collect_reference_preambles(
    link: LinkConfig,
    scene: SceneConfig,
    seed: int,
    sample_rate: float = 250e3,
    min_symbols: int = 10 * 32 * 32,
) -> np.ndarray:
    """Received preamble cloud for an interference-free run of the link."""
    frame_n = link.frame_samples()
    n_frames = min_symbols // len(link.preamble) + 1
    demod = _FrameDemodulator(link)
    rng = np.random.default_rng(link.seed)
    const = link.constellation
    bps = const.bits_per_symbol
    pre_len = len(link.preamble)
    out: list[np.ndarray] = []
    sym_buffer = np.zeros(0, dtype=np.complex128)
    frames_done = 0
    chunk = 0
    while frames_done < n_frames:
        batch = min(64, n_frames - frames_done)
        syms = np.empty((batch, link.frame_symbols), dtype=np.complex128)
        for b in range(batch):
            info = map_bits(rng.integers(0, 2, link.frame_payload_symbols * bps), const)
            syms[b, :pre_len] = link.preamble.symbols
            syms[b, pre_len:] = np.repeat(info, link.repetition)
        up = np.zeros(batch * link.frame_symbols * link.samples_per_symbol, np.complex128)
        up[:: link.samples_per_symbol] = syms.ravel()
        tx = demod.tx_fir.process(up)
        rx = receive(
            IqBuffer(tx, sample_rate, frames_done * frame_n),
            None,
            scene,
            seed=seed + 15485863 + chunk,
        )
        sym_buffer = np.concatenate([sym_buffer, demod.extract(demod.rx_fir.process(rx.samples))])
        frames_done += batch
        chunk += 1
    tail = 4 * demod.delay + 4 * link.samples_per_symbol
    tx = demod.tx_fir.process(np.zeros(tail, np.complex128))
    rx = receive(IqBuffer(tx, sample_rate, frames_done * frame_n), None, scene, seed=seed + 32452867)
    sym_buffer = np.concatenate([sym_buffer, demod.extract(demod.rx_fir.process(rx.samples))])
    for k in range(n_frames):
        f = sym_buffer[k * link.frame_symbols : (k + 1) * link.frame_symbols]
        if len(f) == link.frame_symbols:
            out.append(f[:pre_len])
    return np.concatenate(out)
