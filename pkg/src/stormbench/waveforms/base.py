"""Streaming generator machinery shared by the built-in waveforms.

Generators are single-owner handles: ``generate(n)`` returns the next n
samples of a conceptually infinite stream, and generating N samples then M
more is bit-identical to generating N+M in one call. That guarantee comes
from producing the stream in fixed internal blocks whose boundaries depend
only on stream position, never on the caller's chunking, and from carrying
all state (PRNG position, oscillator phase, filter tails) in the handle.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np

from ..core import Constellation, map_bits, rrc_taps
from ..errors import ConfigurationError

TAU = 2.0 * math.pi


class BlockFir:
    """Streaming FIR filter built on fixed-size block overlap-add.

    Feeding the same input stream in the same block sizes always produces
    bit-identical output, which is what the resumable-generation contract
    needs (scipy's lfilter state is not split-invariant at the bit level).
    """

    def __init__(self, taps: np.ndarray):
        self.taps = np.asarray(taps, dtype=np.float64)
        self._tail = np.zeros(len(self.taps) - 1, dtype=np.complex128)

    def process(self, block: np.ndarray) -> np.ndarray:
        if len(block) < len(self._tail):
            raise ConfigurationError("FIR block shorter than the filter tail")
        full = np.convolve(block, self.taps)
        out = full[: len(block)]
        out[: len(self._tail)] += self._tail
        self._tail = full[len(block) :].copy()
        return out


class Nco:
    """Numerically controlled oscillator; phase continuous across retunes."""

    def __init__(self, sample_rate: float, freq: float = 0.0, phase: float = 0.0):
        self.sample_rate = sample_rate
        self.freq = freq
        self.phase = phase

    def retune(self, freq: float) -> None:
        self.freq = freq

    def rotate(self, samples: np.ndarray) -> np.ndarray:
        n = len(samples)
        if n == 0:
            return samples
        if self.freq == 0.0 and self.phase == 0.0:
            return samples
        omega = TAU * self.freq / self.sample_rate
        ph = self.phase + omega * np.arange(n)
        out = samples * np.exp(1j * ph)
        self.phase = math.remainder(self.phase + omega * n, TAU)
        return out


class StreamingGenerator(ABC):
    """Base handle: fixed-block production feeding a pending-sample queue."""

    def __init__(self, sample_rate: float):
        if sample_rate <= 0:
            raise ConfigurationError("sample_rate must be > 0")
        self.sample_rate = float(sample_rate)
        self._pending: list[np.ndarray] = []
        self._pending_len = 0

    @abstractmethod
    def _produce(self) -> np.ndarray:
        """Produce the next internal block of the stream."""

    def generate(self, n_samples: int) -> np.ndarray:
        if n_samples < 0:
            raise ValueError("n_samples must be >= 0")
        while self._pending_len < n_samples:
            block = self._produce()
            self._pending.append(block)
            self._pending_len += len(block)
        out = np.empty(n_samples, dtype=np.complex128)
        filled = 0
        while filled < n_samples:
            head = self._pending[0]
            take = min(len(head), n_samples - filled)
            out[filled : filled + take] = head[:take]
            if take == len(head):
                self._pending.pop(0)
            else:
                self._pending[0] = head[take:]
            self._pending_len -= take
            filled += take
        return out


class ShapedSymbolStream(StreamingGenerator):
    """Seeded random symbols through RRC shaping: the narrowband base chain.

    Symbols are drawn from the constellation label space in fixed blocks,
    upsampled, shaped (taps scaled for unit stream power), then rotated to
    the carrier offset and scaled by the gain amplitude.
    """

    SYMBOL_BLOCK = 256

    def __init__(
        self,
        constellation: Constellation,
        symbol_rate: float,
        sample_rate: float,
        *,
        gain_amplitude: float = 1.0,
        carrier_offset: float = 0.0,
        rolloff: float = 0.35,
        span: int = 8,
        seed: int = 0,
    ):
        super().__init__(sample_rate)
        if symbol_rate <= 0:
            raise ConfigurationError("symbol_rate must be > 0")
        sps = sample_rate / symbol_rate
        if abs(sps - round(sps)) > 1e-9 or round(sps) < 2:
            raise ConfigurationError(
                f"symbol_rate {symbol_rate} does not divide sample_rate {sample_rate} "
                "into an integer samples-per-symbol >= 2"
            )
        if abs(carrier_offset) >= sample_rate / 2:
            raise ConfigurationError("carrier_offset beyond Nyquist")
        self.constellation = constellation
        self.sps = int(round(sps))
        self.gain_amplitude = gain_amplitude
        self._rng = np.random.default_rng(seed)
        self._taps = rrc_taps(self.sps, span, rolloff) * math.sqrt(self.sps)
        self._fir = BlockFir(self._taps)
        self._nco = Nco(sample_rate, carrier_offset)

    def _next_symbols(self) -> np.ndarray:
        bits = self._rng.integers(
            0, 2, self.SYMBOL_BLOCK * self.constellation.bits_per_symbol
        )
        return map_bits(bits, self.constellation)

    def _produce(self) -> np.ndarray:
        syms = self._next_symbols()
        up = np.zeros(len(syms) * self.sps, dtype=np.complex128)
        up[:: self.sps] = syms
        block = self._fir.process(up)
        return self._nco.rotate(block) * self.gain_amplitude
