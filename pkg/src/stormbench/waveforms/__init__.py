"""Built-in waveform catalog: implementation bindings the registry can attach
descriptors to, plus factories turning validated parameter maps into
generator handles."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from ..errors import ConfigurationError
from .base import Nco, ShapedSymbolStream, StreamingGenerator
from .narrowband import (
    AmGenerator,
    BaselineDirectGenerator,
    BaselineGenerator,
    FmGenerator,
    HopGenerator,
    HopPlan,
    SweepGenerator,
    default_hop_offsets,
)
from .wideband import (
    DsssGenerator,
    OfdmConfig,
    OfdmGenerator,
    OtfsConfig,
    OtfsGenerator,
    SpreadConfig,
    despread,
    isfft,
    ofdm_demodulate,
    ofdm_modulate,
    otfs_demodulate,
    otfs_modulate,
    pn_chips,
    sfft,
    spread,
)

NARROWBAND = "narrowband"
WIDEBAND = "wideband"


@dataclass(frozen=True)
class GenContext:
    """Session-level context a generator is instantiated against."""

    sample_rate: float = 1e6
    center_frequency: float = 2.45e9


def _offset(params: dict, ctx: GenContext) -> float:
    cf = params.get("center_frequency", ctx.center_frequency)
    off = float(cf) - ctx.center_frequency
    if abs(off) >= ctx.sample_rate / 2:
        raise ConfigurationError(
            f"center_frequency {cf} is outside the session's simulated band"
        )
    return off


@dataclass(frozen=True)
class Binding:
    """An available waveform implementation descriptors can bind to."""

    binding_id: str
    category: str
    factory: Callable[[dict, GenContext], StreamingGenerator]


def _baseline(params: dict, ctx: GenContext) -> StreamingGenerator:
    return BaselineGenerator(
        params.get("modulation", "QPSK"),
        float(params.get("symbol_rate", ctx.sample_rate / 16)),
        float(params.get("gain", 0.0)),
        ctx.sample_rate,
        carrier_offset=_offset(params, ctx),
        seed=int(params.get("seed", 0)),
    )


def _baseline_direct(params: dict, ctx: GenContext) -> StreamingGenerator:
    return BaselineDirectGenerator(
        params.get("modulation", "QPSK"),
        float(params.get("symbol_rate", ctx.sample_rate / 16)),
        float(params.get("gain", 0.0)),
        ctx.sample_rate,
        carrier_offset=_offset(params, ctx),
        seed=int(params.get("seed", 0)),
    )


def _am(params: dict, ctx: GenContext) -> StreamingGenerator:
    return AmGenerator(
        float(params.get("tone_freq", 1e3)),
        float(params.get("mod_index", 0.5)),
        _offset(params, ctx),
        float(params.get("gain", 0.0)),
        ctx.sample_rate,
    )


def _fm(params: dict, ctx: GenContext) -> StreamingGenerator:
    return FmGenerator(
        float(params.get("tone_freq", 1e3)),
        float(params.get("freq_deviation", 20e3)),
        _offset(params, ctx),
        float(params.get("gain", 0.0)),
        ctx.sample_rate,
    )


def _hop(params: dict, ctx: GenContext) -> StreamingGenerator:
    base = _offset(params, ctx)
    offsets = tuple(
        base + f
        for f in default_hop_offsets(
            int(params.get("n_channels", 8)), float(params.get("channel_spacing", 10e3))
        )
    )
    plan = HopPlan(offsets, float(params.get("dwell", 0.01)), int(params.get("seed", 0)))
    return HopGenerator(
        plan,
        params.get("modulation", "QPSK"),
        float(params.get("symbol_rate", ctx.sample_rate / 128)),
        float(params.get("gain", 0.0)),
        ctx.sample_rate,
        seed=int(params.get("seed", 0)),
    )


def _sweep(params: dict, ctx: GenContext) -> StreamingGenerator:
    base = _offset(params, ctx)
    span = float(params.get("sweep_span", 80e3))
    return SweepGenerator(
        base - span / 2,
        base + span / 2,
        float(params.get("period", 0.1)),
        float(params.get("gain", 0.0)),
        ctx.sample_rate,
    )


def _dsss(params: dict, ctx: GenContext) -> StreamingGenerator:
    cfg = SpreadConfig(
        int(params.get("chips_per_symbol", 31)), int(params.get("pn_seed", 0))
    )
    return DsssGenerator(
        cfg,
        params.get("modulation", "QPSK"),
        float(params.get("gain", 0.0)),
        ctx.sample_rate,
        carrier_offset=_offset(params, ctx),
        seed=int(params.get("seed", 0)),
    )


def _ofdm(params: dict, ctx: GenContext) -> StreamingGenerator:
    cfg = OfdmConfig(
        int(params.get("n_subcarriers", 64)), int(params.get("cp_length", 16))
    )
    return OfdmGenerator(
        cfg,
        params.get("modulation", "QPSK"),
        float(params.get("gain", 0.0)),
        ctx.sample_rate,
        carrier_offset=_offset(params, ctx),
        seed=int(params.get("seed", 0)),
    )


def _otfs(params: dict, ctx: GenContext) -> StreamingGenerator:
    cfg = OtfsConfig(
        int(params.get("delay_bins", 64)),
        int(params.get("doppler_bins", 16)),
        int(params.get("cp_length", 16)),
    )
    return OtfsGenerator(
        cfg,
        params.get("modulation", "QPSK"),
        float(params.get("gain", 0.0)),
        ctx.sample_rate,
        carrier_offset=_offset(params, ctx),
        seed=int(params.get("seed", 0)),
    )


BUILTIN_BINDINGS: dict[str, Binding] = {
    b.binding_id: b
    for b in (
        Binding("baseline", NARROWBAND, _baseline),
        Binding("baseline_direct", NARROWBAND, _baseline_direct),
        Binding("am", NARROWBAND, _am),
        Binding("fm", NARROWBAND, _fm),
        Binding("freq_hop", NARROWBAND, _hop),
        Binding("freq_sweep", NARROWBAND, _sweep),
        Binding("dsss", WIDEBAND, _dsss),
        Binding("ofdm", WIDEBAND, _ofdm),
        Binding("otfs", WIDEBAND, _otfs),
    )
}

__all__ = [
    "AmGenerator",
    "BaselineDirectGenerator",
    "BaselineGenerator",
    "Binding",
    "BUILTIN_BINDINGS",
    "DsssGenerator",
    "FmGenerator",
    "GenContext",
    "HopGenerator",
    "HopPlan",
    "Nco",
    "OfdmConfig",
    "OfdmGenerator",
    "OtfsConfig",
    "OtfsGenerator",
    "ShapedSymbolStream",
    "SpreadConfig",
    "StreamingGenerator",
    "SweepGenerator",
    "default_hop_offsets",
    "despread",
    "isfft",
    "ofdm_demodulate",
    "ofdm_modulate",
    "otfs_demodulate",
    "otfs_modulate",
    "pn_chips",
    "sfft",
    "spread",
]
