"""Narrowband generators: baseline, AM, FM, frequency hopping, sweeping.

All emit unit average power at gain 0 dB and occupy well under 10% of the
sample rate at their default parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import Constellation, GainSetting, get_constellation, map_bits, rrc_taps
from ..errors import ConfigurationError
from .base import TAU, Nco, ShapedSymbolStream, StreamingGenerator


@dataclass(frozen=True)
class HopPlan:
    """Channel set, dwell time, and the seed fixing the hop order."""

    channel_offsets: tuple[float, ...]
    dwell: float
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.channel_offsets) == 0:
            raise ConfigurationError("hop plan needs at least one channel")
        if self.dwell <= 0:
            raise ConfigurationError("dwell must be > 0")
        object.__setattr__(self, "channel_offsets", tuple(float(f) for f in self.channel_offsets))

    def validate_against(self, sample_rate: float) -> None:
        for f in self.channel_offsets:
            if abs(f) >= sample_rate / 2:
                raise ConfigurationError(f"hop offset {f} beyond Nyquist")


def default_hop_offsets(n_channels: int = 8, spacing: float = 10e3) -> tuple[float, ...]:
    """Symmetric channel comb centered on 0 Hz."""
    return tuple((k - (n_channels - 1) / 2.0) * spacing for k in range(n_channels))


class BaselineGenerator(ShapedSymbolStream):
    """Continuous single-carrier pulse-shaped stream of seeded random symbols.

    This is the composed-base-chain (Mode 2) variant: it only supplies the
    symbol source; shaping, mixing, and scaling come from the shared chain.
    """

    def __init__(
        self,
        constellation: Constellation | str = "QPSK",
        symbol_rate: float = 62_500.0,
        gain: GainSetting | float = 0.0,
        sample_rate: float = 1e6,
        *,
        carrier_offset: float = 0.0,
        seed: int = 0,
    ):
        conste = (
            constellation
            if isinstance(constellation, Constellation)
            else get_constellation(constellation)
        )
        g = gain if isinstance(gain, GainSetting) else GainSetting(float(gain))
        super().__init__(
            conste,
            symbol_rate,
            sample_rate,
            gain_amplitude=g.amplitude,
            carrier_offset=carrier_offset,
            seed=seed,
        )


class BaselineDirectGenerator(StreamingGenerator):
    """Self-contained (Mode 1) baseline implementation.

    Runs the whole pipeline inline instead of composing the shared chain;
    with identical parameters it is sample-identical to BaselineGenerator,
    which is the Mode 1 / Mode 2 conformance pair.
    """

    SYMBOL_BLOCK = ShapedSymbolStream.SYMBOL_BLOCK

    def __init__(
        self,
        constellation: Constellation | str = "QPSK",
        symbol_rate: float = 62_500.0,
        gain: GainSetting | float = 0.0,
        sample_rate: float = 1e6,
        *,
        carrier_offset: float = 0.0,
        seed: int = 0,
    ):
        super().__init__(sample_rate)
        conste = (
            constellation
            if isinstance(constellation, Constellation)
            else get_constellation(constellation)
        )
        sps = sample_rate / symbol_rate
        if abs(sps - round(sps)) > 1e-9 or round(sps) < 2:
            raise ConfigurationError("symbol_rate must divide sample_rate, sps >= 2")
        if abs(carrier_offset) >= sample_rate / 2:
            raise ConfigurationError("carrier_offset beyond Nyquist")
        g = gain if isinstance(gain, GainSetting) else GainSetting(float(gain))
        self.constellation = conste
        self.sps = int(round(sps))
        self.amplitude = g.amplitude
        self.offset = carrier_offset
        self._rng = np.random.default_rng(seed)
        self._taps = rrc_taps(self.sps, 8, 0.35) * math.sqrt(self.sps)
        self._tail = np.zeros(len(self._taps) - 1, dtype=np.complex128)
        self._phase = 0.0

    def _produce(self) -> np.ndarray:
        bits = self._rng.integers(0, 2, self.SYMBOL_BLOCK * self.constellation.bits_per_symbol)
        syms = map_bits(bits, self.constellation)
        up = np.zeros(len(syms) * self.sps, dtype=np.complex128)
        up[:: self.sps] = syms
        full = np.convolve(up, self._taps)
        block = full[: len(up)]
        block[: len(self._tail)] += self._tail
        self._tail = full[len(up) :].copy()
        if self.offset != 0.0 or self._phase != 0.0:
            omega = TAU * self.offset / self.sample_rate
            ph = self._phase + omega * np.arange(len(block))
            block = block * np.exp(1j * ph)
            self._phase = math.remainder(self._phase + omega * len(block), TAU)
        return block * self.amplitude


class _ClosedFormGenerator(StreamingGenerator):
    """Generator whose samples are a closed-form function of the absolute
    sample index; inherently resumable under any call pattern."""

    BLOCK = 4096

    def __init__(self, sample_rate: float):
        super().__init__(sample_rate)
        self._n_produced = 0

    def _sample_block(self, start: int, count: int) -> np.ndarray:
        raise NotImplementedError

    def _produce(self) -> np.ndarray:
        block = self._sample_block(self._n_produced, self.BLOCK)
        self._n_produced += len(block)
        return block


class AmGenerator(_ClosedFormGenerator):
    """Tone-modulated AM carrier at a baseband offset.

    sample n = A*(1 + mod_index*cos(2*pi*tone*n/fs))*exp(j*2*pi*offset*n/fs),
    with A chosen so the mean power at gain 0 dB is exactly 1.
    """

    def __init__(
        self,
        tone_freq: float = 1e3,
        mod_index: float = 0.5,
        carrier_offset: float = 0.0,
        gain: GainSetting | float = 0.0,
        sample_rate: float = 1e6,
    ):
        super().__init__(sample_rate)
        if not 0.0 <= mod_index <= 1.0:
            raise ConfigurationError("mod_index must be within [0, 1]")
        if abs(tone_freq) >= sample_rate / 2 or abs(carrier_offset) >= sample_rate / 2:
            raise ConfigurationError("tone/offset beyond Nyquist")
        g = gain if isinstance(gain, GainSetting) else GainSetting(float(gain))
        self.tone_freq = tone_freq
        self.mod_index = mod_index
        self.carrier_offset = carrier_offset
        self.amplitude = g.amplitude / math.sqrt(1.0 + mod_index**2 / 2.0)

    def _sample_block(self, start: int, count: int) -> np.ndarray:
        n = np.arange(start, start + count, dtype=np.float64)
        env = 1.0 + self.mod_index * np.cos(TAU * self.tone_freq * n / self.sample_rate)
        carrier = np.exp(1j * TAU * self.carrier_offset * n / self.sample_rate)
        return self.amplitude * env * carrier


class FmGenerator(_ClosedFormGenerator):
    """Constant-envelope tone-modulated FM carrier.

    phase(t) = 2*pi*offset*t + (deviation/tone)*sin(2*pi*tone*t).
    """

    def __init__(
        self,
        tone_freq: float = 1e3,
        freq_deviation: float = 20e3,
        carrier_offset: float = 0.0,
        gain: GainSetting | float = 0.0,
        sample_rate: float = 1e6,
    ):
        super().__init__(sample_rate)
        if tone_freq <= 0:
            raise ConfigurationError("tone_freq must be > 0")
        if freq_deviation < 0 or freq_deviation + abs(carrier_offset) >= sample_rate / 2:
            raise ConfigurationError("deviation + |offset| beyond Nyquist")
        g = gain if isinstance(gain, GainSetting) else GainSetting(float(gain))
        self.tone_freq = tone_freq
        self.freq_deviation = freq_deviation
        self.carrier_offset = carrier_offset
        self.amplitude = g.amplitude

    def _sample_block(self, start: int, count: int) -> np.ndarray:
        t = np.arange(start, start + count, dtype=np.float64) / self.sample_rate
        beta = self.freq_deviation / self.tone_freq
        phase = TAU * self.carrier_offset * t + beta * np.sin(TAU * self.tone_freq * t)
        return self.amplitude * np.exp(1j * phase)


class SweepGenerator(StreamingGenerator):
    """Phase-continuous sawtooth linear chirp from f_start to f_end.

    Within a period the phase is closed-form in the sample index; the phase
    offset accumulated by whole periods is carried in the handle so period
    boundaries are exact regardless of call chunking.
    """

    BLOCK = 4096

    def __init__(
        self,
        f_start: float = -40e3,
        f_end: float = 40e3,
        period: float = 0.1,
        gain: GainSetting | float = 0.0,
        sample_rate: float = 1e6,
    ):
        super().__init__(sample_rate)
        if period <= 0:
            raise ConfigurationError("period must be > 0")
        if abs(f_start) >= sample_rate / 2 or abs(f_end) >= sample_rate / 2:
            raise ConfigurationError("sweep bounds beyond Nyquist")
        g = gain if isinstance(gain, GainSetting) else GainSetting(float(gain))
        self.f_start = f_start
        self.f_end = f_end
        self.period_samples = max(1, int(round(period * sample_rate)))
        self.amplitude = g.amplitude
        self._n = 0  # absolute index within the current period
        self._k_phase = 0.0  # phase at the start of the current period
        span = f_end - f_start
        npd = self.period_samples
        # phase advance over one full period, from summing 2*pi*f[n]/fs
        self._period_phase = math.remainder(
            TAU / sample_rate * (f_start * npd + span * (npd - 1) / 2.0), TAU
        )
        self._slope = span / npd  # Hz per sample

    def _produce(self) -> np.ndarray:
        npd = self.period_samples
        m0 = self._n % npd
        count = min(self.BLOCK, npd - m0)
        m = np.arange(m0, m0 + count, dtype=np.float64)
        phase = self._k_phase + TAU / self.sample_rate * (
            self.f_start * m + self._slope * m * (m - 1) / 2.0
        )
        self._n += count
        if (m0 + count) == npd:
            self._k_phase = math.remainder(self._k_phase + self._period_phase, TAU)
            self._n = 0
        return self.amplitude * np.exp(1j * phase)


class HopGenerator(StreamingGenerator):
    """Baseline stream hopped over a channel set with a seeded order.

    The inner symbol stream runs continuously; only the oscillator retunes at
    dwell boundaries, phase-continuously. Dwell boundaries are fixed sample
    indices, so output is call-pattern independent.
    """

    def __init__(
        self,
        plan: HopPlan,
        constellation: Constellation | str = "QPSK",
        symbol_rate: float = 7812.5,
        gain: GainSetting | float = 0.0,
        sample_rate: float = 1e6,
        *,
        seed: int = 0,
    ):
        super().__init__(sample_rate)
        plan.validate_against(sample_rate)
        if plan.dwell < 10.0 / symbol_rate:
            raise ConfigurationError("dwell must cover at least 10 symbol periods")
        self.plan = plan
        self._inner = ShapedSymbolStream(
            constellation
            if isinstance(constellation, Constellation)
            else get_constellation(constellation),
            symbol_rate,
            sample_rate,
            gain_amplitude=(
                gain if isinstance(gain, GainSetting) else GainSetting(float(gain))
            ).amplitude,
            seed=seed,
        )
        self._hop_rng = np.random.default_rng(plan.seed)
        self.dwell_samples = max(1, int(round(plan.dwell * sample_rate)))
        self._nco = Nco(sample_rate)
        self._dwell_left = 0
        self.hop_history: list[int] = []

    def _produce(self) -> np.ndarray:
        if self._dwell_left == 0:
            idx = int(self._hop_rng.integers(0, len(self.plan.channel_offsets)))
            self.hop_history.append(idx)
            self._nco.retune(self.plan.channel_offsets[idx])
            self._dwell_left = self.dwell_samples
        count = min(4096, self._dwell_left)
        block = self._inner.generate(count)
        self._dwell_left -= count
        return self._nco.rotate(block)
