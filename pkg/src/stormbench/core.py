"""Foundational baseband DSP shared by every waveform.

Complex sample buffers, Gray-coded digital constellations, root-raised-cosine
pulse shaping, complex mixing, and dB gain scaling. Everything here is a pure
function of its inputs; buffers are immutable once produced.

Gray mapping tables
-------------------
Per-axis level labels use the reflected binary code g(k) = k ^ (k >> 1) with
levels enumerated from the most positive downward, so label 0 is always the
most positive level (BPSK: bit 0 -> +1, bit 1 -> -1). Symbol labels
concatenate the I-axis bits (most significant) with the Q-axis bits.

  BPSK   levels +1, -1                      scale 1
  QPSK   levels +1, -1 per axis             scale 1/sqrt(2)
  8QAM   rectangular 4 (I) x 2 (Q) lattice  scale 1/sqrt(6)
  16QAM  levels +3, +1, -1, -3 per axis     scale 1/sqrt(10)
  64QAM  levels +7 ... -7 per axis          scale 1/sqrt(42)

All constellations have unit average symbol energy, and lattice-adjacent
points differ in exactly one bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError

MODULATION_IDS = ("BPSK", "QPSK", "8QAM", "16QAM", "64QAM")


@dataclass(frozen=True)
class IqBuffer:
    """A timestamped block of complex baseband samples at a declared rate.

    ``start_timestamp`` is an integer sample index since the stream epoch; in
    a contiguous stream each buffer starts where the previous one ended.
    """

    samples: np.ndarray
    sample_rate: float
    start_timestamp: int = 0

    def __post_init__(self) -> None:
        if self.sample_rate <= 0:
            raise ConfigurationError(f"sample_rate must be > 0, got {self.sample_rate}")
        arr = np.ascontiguousarray(np.asarray(self.samples, dtype=np.complex128))
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "start_timestamp", int(self.start_timestamp))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def end_timestamp(self) -> int:
        """First sample index after this buffer."""
        return self.start_timestamp + len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def follows(self, previous: "IqBuffer") -> bool:
        """True when this buffer continues ``previous`` gap-free."""
        return (
            self.sample_rate == previous.sample_rate
            and self.start_timestamp == previous.end_timestamp
        )

    def mean_power(self) -> float:
        if len(self.samples) == 0:
            return 0.0
        return float(np.mean(np.abs(self.samples) ** 2))


@dataclass(frozen=True)
class Constellation:
    """A Gray-coded constellation with unit average symbol energy.

    ``points[i]`` carries the bit label ``bit_map[i]``; the label is the
    integer value of the bits-per-symbol group, most significant bit first.
    """

    modulation_id: str
    points: np.ndarray
    bit_map: np.ndarray
    _by_label: np.ndarray = field(repr=False, default=None)

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.complex128)
        labels = np.asarray(self.bit_map, dtype=np.int64)
        pts.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "bit_map", labels)
        if sorted(labels.tolist()) != list(range(len(pts))):
            raise ConfigurationError("bit_map must be a bijection onto 0..M-1")
        by_label = np.empty(len(pts), dtype=np.complex128)
        by_label[labels] = pts
        by_label.setflags(write=False)
        object.__setattr__(self, "_by_label", by_label)

    @property
    def bits_per_symbol(self) -> int:
        return int(round(math.log2(len(self.points))))

    def point_for_label(self, label: int) -> complex:
        return complex(self._by_label[label])

    def decide(self, symbols: np.ndarray) -> np.ndarray:
        """Nearest-point decisions; returns the decided points."""
        z = np.asarray(symbols, dtype=np.complex128)
        idx = np.argmin(np.abs(z[:, None] - self.points[None, :]), axis=1)
        return self.points[idx]

    def decide_labels(self, symbols: np.ndarray) -> np.ndarray:
        z = np.asarray(symbols, dtype=np.complex128)
        idx = np.argmin(np.abs(z[:, None] - self.points[None, :]), axis=1)
        return self.bit_map[idx]


def _gray(k: int) -> int:
    return k ^ (k >> 1)


def _axis_levels(n_levels: int) -> np.ndarray:
    # Most positive level first so that label 0 lands on it.
    return np.array([n_levels - 1 - 2 * k for k in range(n_levels)], dtype=float)


def _build_rect_qam(modulation_id: str, i_levels: int, q_levels: int) -> Constellation:
    ivals = _axis_levels(i_levels)
    qvals = _axis_levels(q_levels)
    scale = 1.0 / math.sqrt(np.mean(ivals**2) + np.mean(qvals**2))
    qbits = int(round(math.log2(q_levels)))
    points = []
    labels = []
    for ki in range(i_levels):
        for kq in range(q_levels):
            points.append(scale * (ivals[ki] + 1j * qvals[kq]))
            labels.append((_gray(ki) << qbits) | _gray(kq))
    return Constellation(modulation_id, np.array(points), np.array(labels))


def _build_bpsk() -> Constellation:
    return Constellation("BPSK", np.array([1.0 + 0j, -1.0 + 0j]), np.array([0, 1]))


_CONSTELLATIONS = {
    "BPSK": _build_bpsk(),
    "QPSK": _build_rect_qam("QPSK", 2, 2),
    "8QAM": _build_rect_qam("8QAM", 4, 2),
    "16QAM": _build_rect_qam("16QAM", 4, 4),
    "64QAM": _build_rect_qam("64QAM", 8, 8),
}


def get_constellation(modulation_id: str) -> Constellation:
    try:
        return _CONSTELLATIONS[modulation_id.upper()]
    except KeyError:
        raise ConfigurationError(
            f"unknown modulation {modulation_id!r}; expected one of {MODULATION_IDS}"
        ) from None


@dataclass(frozen=True)
class GainSetting:
    """Gain in dB relative to unit average power."""

    gain_db: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.gain_db):
            raise ConfigurationError("gain_db must be finite")

    @property
    def amplitude(self) -> float:
        return 10.0 ** (self.gain_db / 20.0)

    @property
    def power_factor(self) -> float:
        return 10.0 ** (self.gain_db / 10.0)


def map_bits(bits: Sequence[int], constellation: Constellation) -> np.ndarray:
    """Map a bit sequence onto constellation points, MSB-first per symbol."""
    b = np.asarray(bits, dtype=np.int64)
    m = constellation.bits_per_symbol
    if len(b) % m != 0:
        raise ValueError(f"bit count {len(b)} not divisible by bits/symbol {m}")
    if len(b) == 0:
        return np.zeros(0, dtype=np.complex128)
    groups = b.reshape(-1, m)
    weights = 1 << np.arange(m - 1, -1, -1)
    labels = groups @ weights
    return constellation._by_label[labels]


def rrc_taps(samples_per_symbol: int, span: int = 8, rolloff: float = 0.35) -> np.ndarray:
    """Unit-energy root-raised-cosine taps spanning ``span`` symbols."""
    if samples_per_symbol < 2:
        raise ConfigurationError("samples_per_symbol must be >= 2")
    if not 0.0 <= rolloff <= 1.0:
        raise ConfigurationError("rolloff must be within [0, 1]")
    sps = samples_per_symbol
    n = np.arange(-span * sps // 2, span * sps // 2 + 1)
    t = n / sps
    h = np.empty(len(t))
    beta = rolloff
    for i, ti in enumerate(t):
        if abs(ti) < 1e-12:
            h[i] = 1.0 - beta + 4.0 * beta / math.pi
        elif beta > 0 and abs(abs(4.0 * beta * ti) - 1.0) < 1e-9:
            h[i] = (beta / math.sqrt(2.0)) * (
                (1.0 + 2.0 / math.pi) * math.sin(math.pi / (4.0 * beta))
                + (1.0 - 2.0 / math.pi) * math.cos(math.pi / (4.0 * beta))
            )
        else:
            num = math.sin(math.pi * ti * (1.0 - beta)) + 4.0 * beta * ti * math.cos(
                math.pi * ti * (1.0 + beta)
            )
            den = math.pi * ti * (1.0 - (4.0 * beta * ti) ** 2)
            h[i] = num / den
    return h / math.sqrt(np.sum(h * h))


def pulse_shape(
    symbols: Sequence[complex],
    samples_per_symbol: int = 8,
    rolloff: float = 0.35,
    *,
    span: int = 8,
    sample_rate: float | None = None,
    start_timestamp: int = 0,
) -> IqBuffer:
    """Root-raised-cosine interpolation of a symbol sequence.

    The tap set is scaled by sqrt(sps) so a unit-power symbol stream yields a
    unit-power sample stream. Output is the full convolution (filter
    transient included); an empty symbol sequence yields an empty buffer.
    """
    fs = float(sample_rate) if sample_rate is not None else float(samples_per_symbol)
    syms = np.asarray(symbols, dtype=np.complex128)
    if len(syms) == 0:
        return IqBuffer(np.zeros(0, dtype=np.complex128), fs, start_timestamp)
    taps = rrc_taps(samples_per_symbol, span, rolloff) * math.sqrt(samples_per_symbol)
    up = np.zeros(len(syms) * samples_per_symbol, dtype=np.complex128)
    up[::samples_per_symbol] = syms
    return IqBuffer(np.convolve(up, taps), fs, start_timestamp)


def matched_filter_symbols(
    buffer: IqBuffer,
    n_symbols: int,
    samples_per_symbol: int = 8,
    rolloff: float = 0.35,
    span: int = 8,
) -> np.ndarray:
    """Matched-filter a ``pulse_shape`` output and sample at symbol instants.

    Assumes the buffer starts at the shaping filter's transient (genie
    timing), i.e. it is the unmodified full convolution from ``pulse_shape``.
    """
    taps = rrc_taps(samples_per_symbol, span, rolloff) / math.sqrt(samples_per_symbol)
    y = np.convolve(buffer.samples, taps)
    delay = len(taps) - 1
    idx = delay + np.arange(n_symbols) * samples_per_symbol
    if len(y) <= idx[-1]:
        raise ValueError("buffer too short for the requested symbol count")
    return y[idx]


def mix(
    buffer: IqBuffer, freq_offset: float, initial_phase: float = 0.0
) -> tuple[IqBuffer, float]:
    """Frequency-shift a buffer by ``freq_offset`` Hz.

    Sample n is multiplied by exp(j*(2*pi*freq_offset*n/fs + initial_phase)).
    Returns the shifted buffer and the final phase so successive calls are
    phase-continuous.
    """
    fs = buffer.sample_rate
    if abs(freq_offset) >= fs / 2:
        raise ValueError(f"freq_offset {freq_offset} beyond Nyquist ({fs / 2})")
    n = len(buffer.samples)
    omega = 2.0 * math.pi * freq_offset / fs
    phase = initial_phase + omega * np.arange(n)
    out = buffer.samples * np.exp(1j * phase)
    final_phase = math.remainder(initial_phase + omega * n, 2.0 * math.pi)
    return IqBuffer(out, fs, buffer.start_timestamp), final_phase


def apply_gain(buffer: IqBuffer, gain: GainSetting | float) -> IqBuffer:
    """Scale every sample by 10^(gain_db/20)."""
    g = gain if isinstance(gain, GainSetting) else GainSetting(float(gain))
    return IqBuffer(buffer.samples * g.amplitude, buffer.sample_rate, buffer.start_timestamp)
