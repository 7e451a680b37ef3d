"""Timestamped experiment manifests, event logs, metrics, and I/Q captures.

One directory per run:

    runs/<run_id>/manifest.json     sealed at close; canonical JSON
    runs/<run_id>/events.jsonl      append-only event log
    runs/<run_id>/metrics.jsonl     MetricsRecords as JSON lines
    runs/<run_id>/captures/*.iq     interleaved little-endian float32 I,Q
    runs/<run_id>/captures/*.meta.json

Manifests serialize canonically (sorted keys, fixed layout), so
serialize -> parse -> serialize is byte-stable.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .core import IqBuffer
from .errors import ConfigurationError, IllegalState
from .metrics import MetricsRecord

_MANIFEST = "manifest.json"
_EVENTS = "events.jsonl"
_METRICS = "metrics.jsonl"
_CAPTURE_DIR = "captures"


def canonical_json(doc: Mapping) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


@dataclass(frozen=True)
class CaptureDescriptor:
    name: str
    path: str  # relative to the run directory
    sidecar: str
    sample_rate: float
    start_timestamp: int
    sample_count: int

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "path": self.path,
            "sidecar": self.sidecar,
            "sample_rate": self.sample_rate,
            "start_timestamp": self.start_timestamp,
            "sample_count": self.sample_count,
        }


@dataclass(frozen=True)
class ExperimentManifest:
    run_id: str
    created_utc: str
    config: Mapping[str, Any]
    events: tuple[dict, ...]
    captures: tuple[CaptureDescriptor, ...]
    metrics_files: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "created_utc": self.created_utc,
            "config": dict(self.config),
            "event_count": len(self.events),
            "events_file": _EVENTS,
            "artifacts": {
                "captures": [c.to_dict() for c in self.captures],
                "metrics": list(self.metrics_files),
            },
        }


class RunWriter:
    """Single-owner writer for one run directory."""

    def __init__(
        self,
        root: Path | str,
        run_id: str | None = None,
        *,
        config: Mapping[str, Any] | None = None,
        max_capture_bytes: int | None = None,
    ):
        self.run_id = run_id or time.strftime("run-%Y%m%dT%H%M%S", time.gmtime())
        self.run_dir = Path(root) / self.run_id
        if self.run_dir.exists():
            raise ConfigurationError(f"run directory {self.run_dir} already exists")
        (self.run_dir / _CAPTURE_DIR).mkdir(parents=True)
        self.created_utc = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        self.config = dict(config or {})
        self.max_capture_bytes = max_capture_bytes
        self._captured_bytes = 0
        self._events: list[dict] = []
        self._captures: list[CaptureDescriptor] = []
        self._metrics_files: set[str] = set()
        self._events_fh = open(self.run_dir / _EVENTS, "w", encoding="utf-8")
        self._metrics_fh = None
        self._closed = False

    # -- events --------------------------------------------------------------

    def append_event(self, event: Mapping[str, Any]) -> None:
        if self._closed:
            raise IllegalState("run is sealed")
        doc = dict(event)
        self._events.append(doc)
        self._events_fh.write(json.dumps(doc, sort_keys=True) + "\n")
        self._events_fh.flush()

    def append_metrics(self, record: MetricsRecord | Mapping[str, Any]) -> None:
        if self._closed:
            raise IllegalState("run is sealed")
        doc = record.to_dict() if isinstance(record, MetricsRecord) else dict(record)
        if self._metrics_fh is None:
            self._metrics_fh = open(self.run_dir / _METRICS, "w", encoding="utf-8")
            self._metrics_files.add(_METRICS)
        self._metrics_fh.write(json.dumps(doc, sort_keys=True) + "\n")
        self._metrics_fh.flush()

    # -- captures ------------------------------------------------------------

    def capture_iq(self, buffer: IqBuffer, name: str) -> CaptureDescriptor:
        """Write interleaved float32 I/Q plus a JSON sidecar.

        A failed write is logged as an event and re-raised; the run remains
        usable.
        """
        if self._closed:
            raise IllegalState("run is sealed")
        nbytes = 8 * len(buffer)
        if self.max_capture_bytes is not None and self._captured_bytes + nbytes > self.max_capture_bytes:
            raise ConfigurationError("max_capture_bytes exceeded")
        rel = f"{_CAPTURE_DIR}/{name}.iq"
        sidecar_rel = f"{_CAPTURE_DIR}/{name}.meta.json"
        try:
            interleaved = np.empty(2 * len(buffer), dtype="<f4")
            interleaved[0::2] = buffer.samples.real
            interleaved[1::2] = buffer.samples.imag
            (self.run_dir / rel).write_bytes(interleaved.tobytes())
            (self.run_dir / sidecar_rel).write_text(
                canonical_json(
                    {
                        "sample_rate": buffer.sample_rate,
                        "start_timestamp": buffer.start_timestamp,
                        "sample_count": len(buffer),
                    }
                ),
                encoding="utf-8",
            )
        except OSError as e:
            self.append_event({"kind": "error", "operation": "capture_iq", "detail": str(e)})
            raise
        self._captured_bytes += nbytes
        desc = CaptureDescriptor(
            name, rel, sidecar_rel, buffer.sample_rate, buffer.start_timestamp, len(buffer)
        )
        self._captures.append(desc)
        return desc

    # -- sealing ---------------------------------------------------------------

    def close(self) -> ExperimentManifest:
        if self._closed:
            raise IllegalState("run already sealed")
        self._events_fh.close()
        if self._metrics_fh is not None:
            self._metrics_fh.close()
        indices = [e.get("index") for e in self._events if "index" in e]
        if any(b < a for a, b in zip(indices, indices[1:])):
            raise IllegalState("event timestamps are not monotone")
        for c in self._captures:
            if not (self.run_dir / c.path).exists() or not (self.run_dir / c.sidecar).exists():
                raise IllegalState(f"capture artifact missing: {c.path}")
        manifest = ExperimentManifest(
            self.run_id,
            self.created_utc,
            self.config,
            tuple(self._events),
            tuple(self._captures),
            tuple(sorted(self._metrics_files)),
        )
        (self.run_dir / _MANIFEST).write_text(canonical_json(manifest.to_dict()), "utf-8")
        self._closed = True
        return manifest


def load_run(run_dir: Path | str) -> ExperimentManifest:
    """Read a sealed run back, events in byte-exact order."""
    run_dir = Path(run_dir)
    doc = json.loads((run_dir / _MANIFEST).read_text(encoding="utf-8"))
    events = []
    events_path = run_dir / doc.get("events_file", _EVENTS)
    if events_path.exists():
        with open(events_path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    events.append(json.loads(line))
    captures = tuple(
        CaptureDescriptor(
            c["name"], c["path"], c["sidecar"], c["sample_rate"], c["start_timestamp"], c["sample_count"]
        )
        for c in doc.get("artifacts", {}).get("captures", [])
    )
    return ExperimentManifest(
        doc["run_id"],
        doc["created_utc"],
        doc.get("config", {}),
        tuple(events),
        captures,
        tuple(doc.get("artifacts", {}).get("metrics", [])),
    )


def read_capture(run_dir: Path | str, desc: CaptureDescriptor | str) -> IqBuffer:
    """Load a capture back into an IqBuffer using its sidecar metadata."""
    run_dir = Path(run_dir)
    if isinstance(desc, str):
        sidecar = run_dir / _CAPTURE_DIR / f"{desc}.meta.json"
        path = run_dir / _CAPTURE_DIR / f"{desc}.iq"
    else:
        sidecar = run_dir / desc.sidecar
        path = run_dir / desc.path
    meta = json.loads(sidecar.read_text(encoding="utf-8"))
    raw = np.frombuffer(path.read_bytes(), dtype="<f4")
    if len(raw) != 2 * meta["sample_count"]:
        raise ConfigurationError(
            f"capture size mismatch: sidecar declares {meta['sample_count']} samples, "
            f"file holds {len(raw) // 2}"
        )
    samples = raw[0::2].astype(np.float64) + 1j * raw[1::2].astype(np.float64)
    return IqBuffer(samples, meta["sample_rate"], meta["start_timestamp"])


def load_metrics(run_dir: Path | str) -> list[dict]:
    path = Path(run_dir) / _METRICS
    if not path.exists():
        return []
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(json.loads(line))
    return out
