"""Simulated UPS: a draining battery with runtime estimation.

Defaults are calibrated so a fresh battery at the default load reads 7200 s
of remaining runtime. Drain is driven by simulated stream time, so the model
is deterministic for a given session history.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigurationError


@dataclass(frozen=True)
class PowerStatus:
    battery_fraction: float
    estimated_runtime_s: float
    load_watts: float

    def to_dict(self) -> dict:
        return {
            "battery_fraction": self.battery_fraction,
            "estimated_runtime_s": self.estimated_runtime_s,
            "load_watts": self.load_watts,
        }


class PowerModel:
    DEFAULT_CAPACITY_J = 720_000.0
    DEFAULT_LOAD_W = 100.0

    def __init__(
        self,
        capacity_joules: float = DEFAULT_CAPACITY_J,
        load_watts: float = DEFAULT_LOAD_W,
    ):
        if capacity_joules <= 0 or load_watts <= 0:
            raise ConfigurationError("capacity and load must be positive")
        self.capacity_joules = capacity_joules
        self.load_watts = load_watts
        self._remaining_joules = capacity_joules

    def set_load(self, watts: float) -> None:
        if watts <= 0:
            raise ConfigurationError("load must be positive")
        self.load_watts = watts

    def drain(self, seconds: float) -> None:
        """Consume energy for ``seconds`` of operation at the current load."""
        if seconds < 0:
            raise ConfigurationError("cannot drain negative time")
        self._remaining_joules = max(0.0, self._remaining_joules - seconds * self.load_watts)

    @property
    def exhausted(self) -> bool:
        return self._remaining_joules <= 0.0

    def status(self) -> PowerStatus:
        fraction = self._remaining_joules / self.capacity_joules
        return PowerStatus(
            battery_fraction=fraction,
            estimated_runtime_s=self._remaining_joules / self.load_watts,
            load_watts=self.load_watts,
        )
