"""Virtual device roles, waveform lifecycle, runtime switching, and schedules.

A single engine owns the session. Samples are pulled with ``step()`` (one
buffer per call, 4096 samples by default), so commands issued between steps
take effect exactly at buffer boundaries. The emitted stream is sample
contiguous across every start/pause/resume/switch: the first sample of a new
waveform occupies the index immediately after the last sample of the old
one, and the virtual sink is never re-initialized.

In live deployments a pump thread calls ``step()`` continuously and commands
arrive through the control service's serialized queue; tests drive the
engine synchronously, which exercises identical code.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

import numpy as np

from .core import IqBuffer
from .errors import ConfigurationError, IllegalState, RoleConflict, UnknownWaveform
from .registry import ValidationReport, WaveformRegistry
from .waveforms import GenContext, StreamingGenerator

ROLES = ("unassigned", "transmitter", "monitor")
STATES = ("Idle", "Running", "Paused", "Stopped")

DEFAULT_DEVICE_CONFIG = {
    "devices": [
        {
            "device_id": "sim-tx-eth0",
            "transport": "ethernet",
            "min_frequency": 70e6,
            "max_frequency": 6e9,
            "max_sample_rate": 25e6,
        },
        {
            "device_id": "sim-rx-usb0",
            "transport": "usb",
            "min_frequency": 70e6,
            "max_frequency": 6e9,
            "max_sample_rate": 56e6,
        },
    ]
}


@dataclass
class VirtualDevice:
    device_id: str
    transport: str
    min_frequency: float
    max_frequency: float
    max_sample_rate: float
    role: str = "unassigned"

    def to_dict(self) -> dict:
        return {
            "device_id": self.device_id,
            "transport": self.transport,
            "min_frequency": self.min_frequency,
            "max_frequency": self.max_frequency,
            "max_sample_rate": self.max_sample_rate,
            "role": self.role,
        }


def discover_devices(config: Mapping | str | Path | None = None) -> list[VirtualDevice]:
    """Deterministic device list from the simulation config (stable ids)."""
    if config is None:
        doc = DEFAULT_DEVICE_CONFIG
    elif isinstance(config, (str, Path)):
        doc = json.loads(Path(config).read_text(encoding="utf-8"))
    else:
        doc = config
    out = []
    for d in doc.get("devices", []):
        out.append(
            VirtualDevice(
                device_id=str(d["device_id"]),
                transport=str(d.get("transport", "ethernet")),
                min_frequency=float(d.get("min_frequency", 70e6)),
                max_frequency=float(d.get("max_frequency", 6e9)),
                max_sample_rate=float(d.get("max_sample_rate", 25e6)),
            )
        )
    return out


@dataclass(frozen=True)
class SwitchEvent:
    """One runtime waveform transition and its measured gap."""

    from_waveform: str | None
    to_waveform: str
    previous_end_index: int
    next_start_index: int
    sample_rate: float

    @property
    def previous_end_s(self) -> float:
        return self.previous_end_index / self.sample_rate

    @property
    def next_start_s(self) -> float:
        return self.next_start_index / self.sample_rate

    @property
    def gap_delta_s(self) -> float:
        """Gap beyond the one-sample period that contiguity requires, >= 0."""
        raw = (self.next_start_index - self.previous_end_index) / self.sample_rate
        return max(0.0, raw - 1.0 / self.sample_rate)

    def to_dict(self) -> dict:
        return {
            "from_waveform": self.from_waveform,
            "to_waveform": self.to_waveform,
            "previous_end_index": self.previous_end_index,
            "next_start_index": self.next_start_index,
            "previous_end_s": self.previous_end_s,
            "next_start_s": self.next_start_s,
            "gap_delta_s": self.gap_delta_s,
        }


@dataclass(frozen=True)
class ScheduleEntry:
    waveform_id: str
    params: Mapping[str, Any] = field(default_factory=dict)
    on_s: float = 5.0
    off_s: float = 5.0
    repeat: int = 1

    def __post_init__(self) -> None:
        if self.on_s <= 0 or self.off_s <= 0:
            raise ConfigurationError("schedule durations must be > 0")
        if self.repeat < 1:
            raise ConfigurationError("repeat must be >= 1")


@dataclass(frozen=True)
class SchedulePlan:
    entries: tuple[ScheduleEntry, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SchedulePlan":
        return cls(
            tuple(
                ScheduleEntry(
                    e["waveform_id"],
                    dict(e.get("params", {})),
                    float(e.get("on_s", 5.0)),
                    float(e.get("off_s", 5.0)),
                    int(e.get("repeat", 1)),
                )
                for e in doc.get("entries", [])
            )
        )


@dataclass(frozen=True)
class ScheduleResult:
    switch_events: tuple[SwitchEvent, ...]
    boundaries: tuple[dict, ...]  # {"index", "time_s", "transition", "waveform_id"}


@dataclass(frozen=True)
class SessionState:
    state: str
    active_waveform: str | None
    stream_clock: int

    def to_dict(self) -> dict:
        return {
            "state": self.state,
            "active_waveform": self.active_waveform,
            "stream_clock": self.stream_clock,
        }


class StreamTap:
    """Bounded drop-oldest subscription to the emitted buffer stream."""

    def __init__(self, maxlen: int = 64):
        self._q: deque[IqBuffer] = deque(maxlen=maxlen)
        self.dropped = 0

    def push(self, buf: IqBuffer) -> None:
        if len(self._q) == self._q.maxlen:
            self.dropped += 1
        self._q.append(buf)

    def poll(self) -> list[IqBuffer]:
        out = list(self._q)
        self._q.clear()
        return out


@dataclass
class _Phase:
    kind: str  # "on" | "off"
    waveform_id: str | None
    params: dict
    n_samples: int


class SessionEngine:
    """The authoritative orchestration loop over a virtual transmitter."""

    def __init__(
        self,
        registry: WaveformRegistry,
        devices: Iterable[VirtualDevice] | None = None,
        *,
        sample_rate: float = 1e6,
        center_frequency: float = 2.45e9,
        buffer_len: int = 4096,
        sink: Callable[[IqBuffer], None] | None = None,
        baseline_seed: int = 0,
    ):
        if sample_rate <= 0 or buffer_len < 1:
            raise ConfigurationError("sample_rate and buffer_len must be positive")
        self.registry = registry
        self.devices = {d.device_id: d for d in (devices or discover_devices())}
        self.sample_rate = float(sample_rate)
        self.center_frequency = float(center_frequency)
        self.buffer_len = int(buffer_len)
        self.sink = sink
        self.baseline_seed = baseline_seed
        self.state = "Idle"
        self.active_waveform: str | None = None
        self.stream_clock = 0  # next sample index to emit
        self.switch_events: list[SwitchEvent] = []
        self.events: list[dict] = []
        self._event_hooks: list[Callable[[dict], None]] = []
        self._taps: list[StreamTap] = []
        self._handle: StreamingGenerator | None = None
        self._program: list[_Phase] | None = None
        self._program_idx = 0
        self._phase_left = 0
        self._schedule_events: list[SwitchEvent] = []
        self._schedule_boundaries: list[dict] = []
        self._last_schedule_result: ScheduleResult | None = None

    # -- events ------------------------------------------------------------

    def on_event(self, hook: Callable[[dict], None]) -> None:
        self._event_hooks.append(hook)

    def _record(self, kind: str, **payload) -> dict:
        event = {
            "kind": kind,
            "index": self.stream_clock,
            "time_s": self.stream_clock / self.sample_rate,
            **payload,
        }
        self.events.append(event)
        for hook in self._event_hooks:
            hook(event)
        return event

    # -- devices -----------------------------------------------------------

    def list_devices(self) -> list[VirtualDevice]:
        return list(self.devices.values())

    def assign_role(self, device_id: str, role: str) -> VirtualDevice:
        if role not in ROLES:
            raise ConfigurationError(f"role must be one of {ROLES}")
        if self.state in ("Running", "Paused"):
            raise IllegalState("role changes are only allowed while the session is stopped")
        try:
            dev = self.devices[device_id]
        except KeyError:
            raise UnknownWaveform(device_id) from None
        if role in ("transmitter", "monitor"):
            holder = self._role_holder(role)
            if holder is not None and holder.device_id != device_id:
                raise RoleConflict(f"{role} already assigned to {holder.device_id}")
        dev.role = role
        self._record("role_assigned", device_id=device_id, role=role)
        return dev

    def _role_holder(self, role: str) -> VirtualDevice | None:
        for d in self.devices.values():
            if d.role == role:
                return d
        return None

    @property
    def transmitter(self) -> VirtualDevice | None:
        return self._role_holder("transmitter")

    @property
    def monitor_device(self) -> VirtualDevice | None:
        return self._role_holder("monitor")

    # -- subscriptions -----------------------------------------------------

    def subscribe(self, maxlen: int = 64) -> StreamTap:
        tap = StreamTap(maxlen)
        self._taps.append(tap)
        return tap

    # -- session lifecycle ---------------------------------------------------

    def session_state(self) -> SessionState:
        return SessionState(self.state, self.active_waveform, self.stream_clock)

    def _normalize_params(self, waveform_id: str, params: Mapping[str, Any] | None) -> dict:
        result = self.registry.validate_params(waveform_id, dict(params or {}))
        if isinstance(result, ValidationReport):
            err = ValueError(f"invalid parameters for {waveform_id}: {result.codes()}")
            err.report = result
            raise err
        return result

    def _check_device_fit(self, params: Mapping[str, Any]) -> None:
        tx = self.transmitter
        if tx is None:
            raise IllegalState("no transmitter role assigned")
        if self.sample_rate > tx.max_sample_rate:
            raise ConfigurationError(
                f"sample_rate {self.sample_rate} exceeds device limit {tx.max_sample_rate}"
            )
        cf = params.get("center_frequency")
        if cf is not None and not (tx.min_frequency <= cf <= tx.max_frequency):
            raise ConfigurationError(
                f"center_frequency {cf} outside device tuning range "
                f"[{tx.min_frequency}, {tx.max_frequency}]"
            )

    def _make_handle(self, waveform_id: str, params: dict) -> StreamingGenerator:
        if "seed" not in params:
            params = {**params, "seed": self.baseline_seed}
        ctx = GenContext(self.sample_rate, self.center_frequency)
        return self.registry.make_generator(waveform_id, params, ctx)

    def start(self, waveform_id: str, params: Mapping[str, Any] | None = None) -> SessionState:
        if self.state not in ("Idle", "Stopped"):
            raise IllegalState(f"cannot start from {self.state}")
        self.registry.get(waveform_id)  # raises UnknownWaveform
        normalized = self._normalize_params(waveform_id, params)
        self._check_device_fit(normalized)
        self._handle = self._make_handle(waveform_id, normalized)
        self.active_waveform = waveform_id
        self._program = None
        self.state = "Running"
        self._record("state", state="Running", waveform_id=waveform_id, params=normalized)
        return self.session_state()

    def pause(self) -> SessionState:
        if self.state != "Running":
            raise IllegalState(f"cannot pause from {self.state}")
        self.state = "Paused"
        self._record("state", state="Paused")
        return self.session_state()

    def resume(self) -> SessionState:
        if self.state != "Paused":
            raise IllegalState(f"cannot resume from {self.state}")
        self.state = "Running"
        self._record("state", state="Running")
        return self.session_state()

    def stop(self) -> SessionState:
        if self.state not in ("Running", "Paused"):
            raise IllegalState(f"cannot stop from {self.state}")
        self.state = "Stopped"
        self.active_waveform = None
        self._handle = None
        self._program = None
        self._record("state", state="Stopped")
        return self.session_state()

    def switch_waveform(
        self, waveform_id: str, params: Mapping[str, Any] | None = None
    ) -> SwitchEvent:
        """Splice a new waveform into the running stream, sample-contiguously.

        The new generator's first sample occupies the index immediately after
        the old generator's last; the sink is never re-initialized.
        """
        if self.state != "Running":
            raise IllegalState(f"cannot switch from {self.state}")
        self.registry.get(waveform_id)
        normalized = self._normalize_params(waveform_id, params)
        self._check_device_fit(normalized)
        event = SwitchEvent(
            from_waveform=self.active_waveform,
            to_waveform=waveform_id,
            previous_end_index=self.stream_clock - 1,
            next_start_index=self.stream_clock,
            sample_rate=self.sample_rate,
        )
        self._handle = self._make_handle(waveform_id, normalized)
        self.active_waveform = waveform_id
        self.switch_events.append(event)
        self._record("switch", **event.to_dict())
        return event

    # -- scheduling ----------------------------------------------------------

    def load_schedule(self, plan: SchedulePlan) -> None:
        """Arm a duty-cycled program; it owns the session until it completes."""
        if self.state in ("Running", "Paused"):
            raise IllegalState("a session is already active")
        if not plan.entries:
            self._last_schedule_result = ScheduleResult((), ())
            return
        program: list[_Phase] = []
        for entry in plan.entries:
            self.registry.get(entry.waveform_id)
            normalized = self._normalize_params(entry.waveform_id, entry.params)
            on_n = int(round(entry.on_s * self.sample_rate))
            off_n = int(round(entry.off_s * self.sample_rate))
            for _ in range(entry.repeat):
                program.append(_Phase("on", entry.waveform_id, normalized, on_n))
                program.append(_Phase("off", None, {}, off_n))
        self._check_device_fit(program[0].params)
        self._program = program
        self._program_idx = 0
        self._phase_left = 0
        self._schedule_events = []
        self._schedule_boundaries = []
        self._last_schedule_result = None
        self.state = "Running"
        self._record("state", state="Running", schedule_entries=len(program) // 2)

    def schedule_active(self) -> bool:
        return self._program is not None

    def last_schedule_result(self) -> ScheduleResult | None:
        return self._last_schedule_result

    def run_schedule(self, plan: SchedulePlan) -> ScheduleResult:
        """Execute a plan to completion and report its events and boundaries."""
        self.load_schedule(plan)
        while self.schedule_active():
            self.step()
        return self._last_schedule_result

    def _enter_next_phase(self) -> None:
        phase = self._program[self._program_idx]
        boundary = {
            "index": self.stream_clock,
            "time_s": self.stream_clock / self.sample_rate,
            "transition": phase.kind,
            "waveform_id": phase.waveform_id,
        }
        self._schedule_boundaries.append(boundary)
        self._record("boundary", **{k: boundary[k] for k in ("transition", "waveform_id")})
        if phase.kind == "on":
            event = SwitchEvent(
                from_waveform=self.active_waveform,
                to_waveform=phase.waveform_id,
                previous_end_index=self.stream_clock - 1,
                next_start_index=self.stream_clock,
                sample_rate=self.sample_rate,
            )
            self._schedule_events.append(event)
            self.switch_events.append(event)
            self._record("switch", **event.to_dict())
            self._handle = self._make_handle(phase.waveform_id, phase.params)
            self.active_waveform = phase.waveform_id
        else:
            self._handle = None
            self.active_waveform = None
        self._phase_left = phase.n_samples

    def _finish_schedule(self) -> None:
        self._schedule_boundaries.append(
            {
                "index": self.stream_clock,
                "time_s": self.stream_clock / self.sample_rate,
                "transition": "end",
                "waveform_id": None,
            }
        )
        self._last_schedule_result = ScheduleResult(
            tuple(self._schedule_events), tuple(self._schedule_boundaries)
        )
        self._program = None
        self.state = "Stopped"
        self.active_waveform = None
        self._handle = None
        self._record("state", state="Stopped", schedule_complete=True)

    # -- emission ------------------------------------------------------------

    def step(self) -> IqBuffer | None:
        """Emit the next buffer while Running; None in any other state.

        Scheduled on/off boundaries split buffers so they land on their exact
        sample indices.
        """
        if self.state != "Running":
            return None
        if self._program is not None:
            while self._phase_left == 0:
                if self._program_idx >= len(self._program):
                    self._finish_schedule()
                    return None
                self._enter_next_phase()
                self._program_idx += 1
            n = min(self.buffer_len, self._phase_left)
            if self._handle is not None:
                samples = self._handle.generate(n)
            else:
                samples = np.zeros(n, dtype=np.complex128)
            self._phase_left -= n
        else:
            if self._handle is None:
                raise IllegalState("running without an active waveform")
            n = self.buffer_len
            samples = self._handle.generate(n)
        buf = IqBuffer(samples, self.sample_rate, self.stream_clock)
        self.stream_clock += n
        if self.sink is not None:
            self.sink(buf)
        for tap in self._taps:
            tap.push(buf)
        return buf

    def run_for(self, n_samples: int) -> None:
        """Advance the session by at least n_samples emitted samples."""
        target = self.stream_clock + n_samples
        while self.stream_clock < target and self.state == "Running":
            self.step()
