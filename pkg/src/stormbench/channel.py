"""Virtual RF environment: log-distance path loss, sparse multipath, AWGN,
and superposition of link plus interference at a receiver.

Everything is a pure function of its inputs and an explicit seed. Scene
presets live as JSON files under ``scenes/``; their exponents, tap profiles,
and noise floors are calibration choices recorded in the files themselves.
The receiver noise realization uses the link channel's (``tx_rx``)
``noise_psd``; the interferer model's noise_psd is ignored.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .core import IqBuffer
from .errors import ConfigurationError


@dataclass(frozen=True)
class ChannelModel:
    distance: float
    path_loss_exponent: float
    reference_distance: float = 1.0
    multipath_taps: tuple[tuple[int, complex], ...] = ((0, 1.0 + 0j),)
    noise_psd: float = 0.0  # power per Hz at the receiver

    def __post_init__(self) -> None:
        if not self.reference_distance > 0:
            raise ConfigurationError("reference_distance must be > 0")
        if self.distance < self.reference_distance:
            raise ConfigurationError("distance must be >= reference_distance")
        if not 1.5 <= self.path_loss_exponent <= 6.0:
            raise ConfigurationError("path_loss_exponent must be within [1.5, 6]")
        taps = tuple((int(d), complex(g)) for d, g in self.multipath_taps)
        delays = [d for d, _ in taps]
        if any(d < 0 for d in delays) or sorted(set(delays)) != delays:
            raise ConfigurationError("tap delays must be non-negative strictly increasing")
        if self.noise_psd < 0:
            raise ConfigurationError("noise_psd must be >= 0")
        object.__setattr__(self, "multipath_taps", taps)

    def tap_energy(self) -> float:
        return float(sum(abs(g) ** 2 for _, g in self.multipath_taps))

    def with_distance(self, distance: float) -> "ChannelModel":
        return ChannelModel(
            distance,
            self.path_loss_exponent,
            self.reference_distance,
            self.multipath_taps,
            self.noise_psd,
        )

    def to_dict(self) -> dict:
        return {
            "distance": self.distance,
            "reference_distance": self.reference_distance,
            "path_loss_exponent": self.path_loss_exponent,
            "multipath_taps": [[d, g.real, g.imag] for d, g in self.multipath_taps],
            "noise_psd": self.noise_psd,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ChannelModel":
        taps = tuple(
            (int(t[0]), complex(float(t[1]), float(t[2]) if len(t) > 2 else 0.0))
            for t in doc.get("multipath_taps", [[0, 1.0, 0.0]])
        )
        return cls(
            float(doc["distance"]),
            float(doc["path_loss_exponent"]),
            float(doc.get("reference_distance", 1.0)),
            taps,
            float(doc.get("noise_psd", 0.0)),
        )


@dataclass(frozen=True)
class SceneConfig:
    label: str
    tx_rx: ChannelModel
    interferer_rx: ChannelModel
    sweep: Mapping | None = None  # e.g. scenario3's interferer-distance axis

    def to_dict(self) -> dict:
        doc = {
            "label": self.label,
            "tx_rx": self.tx_rx.to_dict(),
            "interferer_rx": self.interferer_rx.to_dict(),
        }
        if self.sweep is not None:
            doc["sweep"] = dict(self.sweep)
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SceneConfig":
        return cls(
            str(doc.get("label", "scene")),
            ChannelModel.from_dict(doc["tx_rx"]),
            ChannelModel.from_dict(doc["interferer_rx"]),
            doc.get("sweep"),
        )

    def with_interferer_distance(self, distance: float) -> "SceneConfig":
        return SceneConfig(
            self.label, self.tx_rx, self.interferer_rx.with_distance(distance), self.sweep
        )


def load_scene(path: Path | str) -> SceneConfig:
    return SceneConfig.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def path_loss_db(model: ChannelModel) -> float:
    """Log-distance loss: 10 * n * log10(d / d_ref)."""
    return 10.0 * model.path_loss_exponent * math.log10(model.distance / model.reference_distance)


def propagate(signal: IqBuffer, model: ChannelModel) -> IqBuffer:
    """Path-loss scale then convolve with the sparse tap response."""
    x = signal.samples
    if len(x) and model.multipath_taps[-1][0] >= len(x):
        raise ConfigurationError("tap delay exceeds buffer length")
    amp = 10.0 ** (-path_loss_db(model) / 20.0)
    y = np.zeros(len(x), dtype=np.complex128)
    for delay, g in model.multipath_taps:
        if delay == 0:
            y += g * x
        else:
            y[delay:] += g * x[: len(x) - delay]
    return IqBuffer(amp * y, signal.sample_rate, signal.start_timestamp)


def receive(
    link: IqBuffer,
    interference: IqBuffer | None,
    scene: SceneConfig,
    seed: int = 0,
) -> IqBuffer:
    """Superpose the propagated link, propagated interference, and noise."""
    out = propagate(link, scene.tx_rx).samples.copy()
    if interference is not None and len(interference):
        if interference.sample_rate != link.sample_rate:
            raise ConfigurationError("link and interference sample rates differ")
        if interference.start_timestamp != link.start_timestamp or len(interference) != len(link):
            raise ConfigurationError("link and interference buffers are not aligned")
        out += propagate(interference, scene.interferer_rx).samples
    noise_power = scene.tx_rx.noise_psd * link.sample_rate
    if noise_power > 0:
        rng = np.random.default_rng(seed)
        sigma = math.sqrt(noise_power / 2.0)
        out += sigma * (rng.standard_normal(len(out)) + 1j * rng.standard_normal(len(out)))
    return IqBuffer(out, link.sample_rate, link.start_timestamp)
