"""Wideband waveforms: direct-sequence spread spectrum, OFDM, and OTFS.

The DSSS chain is a generic stand-in carrying the wideband category; OFDM
and OTFS use unitary transforms so modulation/demodulation round-trip
exactly. OTFS pins the ISFFT convention

    X_tf[n, m] = (1/sqrt(N*M)) * sum_k sum_l x_dd[l, k]
                 * exp(+j*2*pi*n*k/N) * exp(-j*2*pi*m*l/M)

with x_dd indexed (delay l in 0..M-1, Doppler k in 0..N-1), n the time slot
and m the subcarrier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import max_len_seq

from ..core import Constellation, GainSetting, IqBuffer, get_constellation, map_bits, rrc_taps
from ..errors import ConfigurationError
from .base import BlockFir, Nco, StreamingGenerator


# ---------------------------------------------------------------------------
# Direct-sequence spreading


@dataclass(frozen=True)
class SpreadConfig:
    chips_per_symbol: int = 31
    pn_seed: int = 0

    def __post_init__(self) -> None:
        if self.chips_per_symbol < 1:
            raise ConfigurationError("chips_per_symbol must be >= 1")


def pn_chips(cfg: SpreadConfig) -> np.ndarray:
    """The +/-1 chip word applied to every symbol.

    When chips_per_symbol is 2^k - 1 the word is an m-sequence (the default
    31 uses a length-31 maximal sequence) cyclically shifted by the seed;
    otherwise it is a seeded Rademacher draw. chips_per_symbol 1 is the
    identity word [+1].
    """
    cps = cfg.chips_per_symbol
    if cps == 1:
        return np.ones(1)
    nbits = int(math.log2(cps + 1))
    if 2**nbits - 1 == cps:
        seq = max_len_seq(nbits)[0].astype(np.float64) * 2.0 - 1.0
        return np.roll(seq, cfg.pn_seed % cps)
    rng = np.random.default_rng(cfg.pn_seed)
    return rng.integers(0, 2, cps).astype(np.float64) * 2.0 - 1.0


def spread(symbols: np.ndarray, cfg: SpreadConfig) -> np.ndarray:
    """Repeat each symbol over the chip word: one symbol -> cps chips."""
    syms = np.asarray(symbols, dtype=np.complex128)
    chips = pn_chips(cfg)
    return (syms[:, None] * chips[None, :]).ravel()


def despread(chips: np.ndarray, cfg: SpreadConfig) -> np.ndarray:
    """Exact inverse of ``spread`` for the same config."""
    c = np.asarray(chips, dtype=np.complex128)
    cps = cfg.chips_per_symbol
    if len(c) % cps != 0:
        raise ValueError(f"chip count {len(c)} not divisible by chips/symbol {cps}")
    word = pn_chips(cfg)
    return (c.reshape(-1, cps) * word[None, :]).mean(axis=1)


# ---------------------------------------------------------------------------
# OFDM


@dataclass(frozen=True)
class OfdmConfig:
    n_subcarriers: int = 64
    cp_length: int = 16
    active_mask: tuple[bool, ...] | None = None  # None -> all active except DC

    def __post_init__(self) -> None:
        n = self.n_subcarriers
        if n < 2 or (n & (n - 1)) != 0:
            raise ConfigurationError("n_subcarriers must be a power of two")
        if not 0 <= self.cp_length < n:
            raise ConfigurationError("cp_length must be within [0, n_subcarriers)")
        if self.active_mask is None:
            mask = [True] * n
            mask[0] = False  # DC inactive by default
            object.__setattr__(self, "active_mask", tuple(mask))
        else:
            if len(self.active_mask) != n:
                raise ConfigurationError("active_mask length must equal n_subcarriers")
            object.__setattr__(self, "active_mask", tuple(bool(b) for b in self.active_mask))

    @property
    def n_active(self) -> int:
        return sum(self.active_mask)

    @property
    def symbol_samples(self) -> int:
        return self.n_subcarriers + self.cp_length


def ofdm_modulate(
    grid: np.ndarray, cfg: OfdmConfig, *, sample_rate: float | None = None
) -> IqBuffer:
    """Per symbol row: unitary inverse DFT, then prepend the cyclic prefix."""
    g = np.atleast_2d(np.asarray(grid, dtype=np.complex128))
    if g.shape[1] != cfg.n_subcarriers:
        raise ValueError(f"grid rows must have length {cfg.n_subcarriers}, got {g.shape[1]}")
    inactive = ~np.asarray(cfg.active_mask)
    if np.any(g[:, inactive] != 0):
        raise ValueError("inactive-mask subcarriers must be zero")
    body = np.fft.ifft(g, axis=1, norm="ortho")
    if cfg.cp_length:
        body = np.concatenate([body[:, -cfg.cp_length :], body], axis=1)
    fs = float(sample_rate) if sample_rate is not None else float(cfg.n_subcarriers)
    return IqBuffer(body.ravel(), fs)


def ofdm_demodulate(buffer: IqBuffer | np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    """Strip cyclic prefixes and apply the forward unitary DFT per symbol."""
    x = buffer.samples if isinstance(buffer, IqBuffer) else np.asarray(buffer, np.complex128)
    step = cfg.symbol_samples
    if len(x) % step != 0:
        raise ValueError(f"buffer length {len(x)} not a multiple of symbol length {step}")
    blocks = x.reshape(-1, step)[:, cfg.cp_length :]
    return np.fft.fft(blocks, axis=1, norm="ortho")


# ---------------------------------------------------------------------------
# OTFS


@dataclass(frozen=True)
class OtfsConfig:
    m_delay_bins: int = 64
    n_doppler_bins: int = 16
    cp_length: int = 16

    def __post_init__(self) -> None:
        for v, name in ((self.m_delay_bins, "m_delay_bins"), (self.n_doppler_bins, "n_doppler_bins")):
            if v < 2 or (v & (v - 1)) != 0:
                raise ConfigurationError(f"{name} must be a power of two")
        if not 0 <= self.cp_length < self.m_delay_bins:
            raise ConfigurationError("cp_length must be within [0, m_delay_bins)")

    @property
    def frame_samples(self) -> int:
        return self.n_doppler_bins * (self.m_delay_bins + self.cp_length)


def isfft(dd_grid: np.ndarray, cfg: OtfsConfig) -> np.ndarray:
    """Delay-Doppler (M, N) grid -> time-frequency (N, M) grid, unitary."""
    x = np.asarray(dd_grid, dtype=np.complex128)
    if x.shape != (cfg.m_delay_bins, cfg.n_doppler_bins):
        raise ValueError(
            f"dd grid must be shape ({cfg.m_delay_bins}, {cfg.n_doppler_bins}), got {x.shape}"
        )
    b = np.fft.ifft(x, axis=1, norm="ortho")  # Doppler k -> time slot n
    c = np.fft.fft(b, axis=0, norm="ortho")  # delay l -> subcarrier m
    return c.T  # (N, M): time slot, subcarrier


def sfft(tf_grid: np.ndarray, cfg: OtfsConfig) -> np.ndarray:
    """Inverse of ``isfft``: time-frequency (N, M) -> delay-Doppler (M, N)."""
    c = np.asarray(tf_grid, dtype=np.complex128).T
    b = np.fft.ifft(c, axis=0, norm="ortho")
    return np.fft.fft(b, axis=1, norm="ortho")


def otfs_modulate(
    dd_grid: np.ndarray, cfg: OtfsConfig, *, sample_rate: float | None = None
) -> IqBuffer:
    """ISFFT to the time-frequency grid, then per-slot unitary inverse DFT
    across subcarriers with a cyclic prefix (Heisenberg step)."""
    tf = isfft(dd_grid, cfg)
    body = np.fft.ifft(tf, axis=1, norm="ortho")  # (N, M) time samples per slot
    if cfg.cp_length:
        body = np.concatenate([body[:, -cfg.cp_length :], body], axis=1)
    fs = float(sample_rate) if sample_rate is not None else float(cfg.m_delay_bins)
    return IqBuffer(body.ravel(), fs)


def otfs_demodulate(buffer: IqBuffer | np.ndarray, cfg: OtfsConfig) -> np.ndarray:
    x = buffer.samples if isinstance(buffer, IqBuffer) else np.asarray(buffer, np.complex128)
    step = cfg.m_delay_bins + cfg.cp_length
    if len(x) != cfg.n_doppler_bins * step:
        raise ValueError(
            f"buffer length {len(x)} does not match one OTFS frame ({cfg.n_doppler_bins * step})"
        )
    slots = x.reshape(cfg.n_doppler_bins, step)[:, cfg.cp_length :]
    tf = np.fft.fft(slots, axis=1, norm="ortho")
    return sfft(tf, cfg)


# ---------------------------------------------------------------------------
# Streaming generators


class DsssGenerator(StreamingGenerator):
    """Seeded symbols spread by the PN word, chip-shaped with RRC at two
    samples per chip: the generic wideband spread-spectrum stand-in."""

    SYMBOL_BLOCK = 64

    def __init__(
        self,
        cfg: SpreadConfig = SpreadConfig(),
        constellation: Constellation | str = "QPSK",
        gain: GainSetting | float = 0.0,
        sample_rate: float = 1e6,
        *,
        chip_sps: int = 2,
        carrier_offset: float = 0.0,
        seed: int = 0,
    ):
        super().__init__(sample_rate)
        if chip_sps < 2:
            raise ConfigurationError("chip_sps must be >= 2")
        g = gain if isinstance(gain, GainSetting) else GainSetting(float(gain))
        self.cfg = cfg
        self.constellation = (
            constellation
            if isinstance(constellation, Constellation)
            else get_constellation(constellation)
        )
        self.chip_sps = chip_sps
        self.amplitude = g.amplitude
        self._rng = np.random.default_rng(seed)
        self._word = pn_chips(cfg)
        taps = rrc_taps(chip_sps, 8, 0.35) * math.sqrt(chip_sps)
        self._fir = BlockFir(taps)
        self._nco = Nco(sample_rate, carrier_offset)

    def _produce(self) -> np.ndarray:
        bits = self._rng.integers(0, 2, self.SYMBOL_BLOCK * self.constellation.bits_per_symbol)
        syms = map_bits(bits, self.constellation)
        chips = spread(syms, self.cfg)
        up = np.zeros(len(chips) * self.chip_sps, dtype=np.complex128)
        up[:: self.chip_sps] = chips
        block = self._fir.process(up)
        return self._nco.rotate(block) * self.amplitude


class OfdmGenerator(StreamingGenerator):
    """Continuous stream of OFDM symbols carrying seeded random payload."""

    SYMBOLS_PER_BLOCK = 16

    def __init__(
        self,
        cfg: OfdmConfig = OfdmConfig(),
        constellation: Constellation | str = "QPSK",
        gain: GainSetting | float = 0.0,
        sample_rate: float = 1e6,
        *,
        carrier_offset: float = 0.0,
        seed: int = 0,
    ):
        super().__init__(sample_rate)
        g = gain if isinstance(gain, GainSetting) else GainSetting(float(gain))
        self.cfg = cfg
        self.constellation = (
            constellation
            if isinstance(constellation, Constellation)
            else get_constellation(constellation)
        )
        self._rng = np.random.default_rng(seed)
        self._nco = Nco(sample_rate, carrier_offset)
        # unit mean power: each emitted sample carries n_active/n of the
        # per-bin unit symbol energy (CP samples are copies, same power)
        self.amplitude = g.amplitude * math.sqrt(cfg.n_subcarriers / cfg.n_active)

    def _produce(self) -> np.ndarray:
        cfg = self.cfg
        n_sym = self.SYMBOLS_PER_BLOCK
        bits = self._rng.integers(
            0, 2, n_sym * cfg.n_active * self.constellation.bits_per_symbol
        )
        payload = map_bits(bits, self.constellation).reshape(n_sym, cfg.n_active)
        grid = np.zeros((n_sym, cfg.n_subcarriers), dtype=np.complex128)
        grid[:, np.asarray(cfg.active_mask)] = payload
        block = ofdm_modulate(grid, cfg, sample_rate=self.sample_rate).samples
        return self._nco.rotate(block) * self.amplitude


class OtfsGenerator(StreamingGenerator):
    """Continuous stream of OTFS frames carrying seeded random payload."""

    def __init__(
        self,
        cfg: OtfsConfig = OtfsConfig(),
        constellation: Constellation | str = "QPSK",
        gain: GainSetting | float = 0.0,
        sample_rate: float = 1e6,
        *,
        carrier_offset: float = 0.0,
        seed: int = 0,
    ):
        super().__init__(sample_rate)
        g = gain if isinstance(gain, GainSetting) else GainSetting(float(gain))
        self.cfg = cfg
        self.constellation = (
            constellation
            if isinstance(constellation, Constellation)
            else get_constellation(constellation)
        )
        self._rng = np.random.default_rng(seed)
        self._nco = Nco(sample_rate, carrier_offset)
        self.amplitude = g.amplitude

    def _produce(self) -> np.ndarray:
        cfg = self.cfg
        n_bins = cfg.m_delay_bins * cfg.n_doppler_bins
        bits = self._rng.integers(0, 2, n_bins * self.constellation.bits_per_symbol)
        dd = map_bits(bits, self.constellation).reshape(cfg.m_delay_bins, cfg.n_doppler_bins)
        block = otfs_modulate(dd, cfg, sample_rate=self.sample_rate).samples
        return self._nco.rotate(block) * self.amplitude
