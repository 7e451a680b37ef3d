"""Descriptor-driven waveform registration.

Descriptors are JSON documents declaring a waveform's identity, category,
execution mode, and typed parameter schema. Validation collects *every*
violation into a report rather than stopping at the first; registration
binds a validated descriptor to an available generator implementation after
a category compatibility check. The registry is a read-mostly store with
serialized, atomic writes.

Violation codes: MissingField, BadType, RangeViolation, BadCategory,
DuplicateName, DefaultOutOfRange, UnknownName (parameter-map checks only).
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .errors import CompatibilityError, DuplicateError, ParseError, UnknownWaveform
from .waveforms import BUILTIN_BINDINGS, Binding, GenContext, StreamingGenerator

CATEGORIES = ("narrowband", "wideband")
EXECUTION_MODES = ("direct_graph", "composed_base_chain")
PARAM_KINDS = ("integer", "float", "enumerated")
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Violation:
    code: str
    field: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"code": v.code, "field": v.field, "message": v.message}
                for v in self.violations
            ],
        }


@dataclass(frozen=True)
class ParameterDef:
    name: str
    kind: str
    units: str = ""
    range: tuple[float, float] | None = None  # numeric kinds
    values: tuple[Any, ...] | None = None  # enumerated kind
    default: Any = None

    def contains(self, value: Any) -> bool:
        if self.kind == "enumerated":
            return value in (self.values or ())
        lo, hi = self.range
        return lo <= value <= hi  # inclusive on both ends


@dataclass(frozen=True)
class WaveformDescriptor:
    waveform_name: str
    category: str
    execution_mode: str
    parameters: tuple[ParameterDef, ...]
    schema_version: int = SCHEMA_VERSION
    generator_binding: str | None = None

    def parameter(self, name: str) -> ParameterDef:
        for p in self.parameters:
            if p.name == name:
                return p
        raise KeyError(name)


@dataclass(frozen=True)
class Widget:
    label: str
    kind: str  # int_input | float_input | dropdown
    units: str
    default: Any
    range: tuple[float, float] | None = None
    options: tuple[Any, ...] | None = None


@dataclass(frozen=True)
class FormSpec:
    waveform_name: str
    widgets: tuple[Widget, ...]

    def to_dict(self) -> dict:
        return {
            "waveform_name": self.waveform_name,
            "widgets": [
                {
                    "label": w.label,
                    "kind": w.kind,
                    "units": w.units,
                    "default": w.default,
                    "range": list(w.range) if w.range is not None else None,
                    "options": list(w.options) if w.options is not None else None,
                }
                for w in self.widgets
            ],
        }


_WIDGET_KIND = {"integer": "int_input", "float": "float_input", "enumerated": "dropdown"}


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _is_integral(v: Any) -> bool:
    if isinstance(v, bool):
        return False
    if isinstance(v, int):
        return True
    return isinstance(v, float) and v.is_integer()


def _validate_parameter(
    raw: Any, index: int, seen_names: set, violations: list[Violation]
) -> ParameterDef | None:
    where = f"parameters[{index}]"
    if not isinstance(raw, Mapping):
        violations.append(Violation("BadType", where, "parameter must be an object"))
        return None
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        violations.append(Violation("MissingField", f"{where}.name", "parameter name required"))
        return None
    where = f"parameters.{name}"
    if name in seen_names:
        violations.append(Violation("DuplicateName", where, f"duplicate parameter {name!r}"))
        return None
    seen_names.add(name)

    kind = raw.get("kind")
    if kind not in PARAM_KINDS:
        violations.append(
            Violation("BadType", f"{where}.kind", f"kind must be one of {PARAM_KINDS}")
        )
        return None

    units = raw.get("units", "")
    if not isinstance(units, str):
        violations.append(Violation("BadType", f"{where}.units", "units must be a string"))
        units = ""

    rng: tuple[float, float] | None = None
    vals: tuple[Any, ...] | None = None
    ok_domain = True
    if kind == "enumerated":
        v = raw.get("values")
        if not isinstance(v, (list, tuple)) or len(v) == 0:
            violations.append(
                Violation("RangeViolation", f"{where}.values", "enumerated list must be non-empty")
            )
            ok_domain = False
        else:
            vals = tuple(v)
    else:
        r = raw.get("range")
        if (
            not isinstance(r, (list, tuple))
            or len(r) != 2
            or not all(_is_number(x) for x in r)
        ):
            violations.append(
                Violation("BadType", f"{where}.range", "range must be [min, max] numbers")
            )
            ok_domain = False
        elif r[0] > r[1]:
            violations.append(
                Violation("RangeViolation", f"{where}.range", "range min exceeds max")
            )
            ok_domain = False
        else:
            rng = (float(r[0]), float(r[1]))

    default = raw.get("default")
    if default is None:
        violations.append(
            Violation("MissingField", f"{where}.default", "parameter default required")
        )
        return None
    if kind == "integer" and not _is_integral(default):
        violations.append(
            Violation("BadType", f"{where}.default", "integer default must be integral")
        )
        return None
    if kind == "float" and not _is_number(default):
        violations.append(Violation("BadType", f"{where}.default", "float default must be numeric"))
        return None
    if kind == "integer":
        default = int(default)
    elif kind == "float":
        default = float(default)

    pd = ParameterDef(name, kind, units, rng, vals, default)
    if ok_domain and not pd.contains(default):
        violations.append(
            Violation(
                "DefaultOutOfRange",
                f"{where}.default",
                f"default {default!r} outside the declared domain",
            )
        )
        return None
    return pd if ok_domain else None


def validate_descriptor(document: str | bytes | Mapping) -> WaveformDescriptor | ValidationReport:
    """Validate a descriptor document, collecting every violation.

    Returns the normalized descriptor on success, else a ValidationReport
    listing all violations. A syntactically invalid document raises
    ParseError.
    """
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as e:
            raise ParseError(f"descriptor is not valid JSON: {e}") from e
    else:
        doc = document
    if not isinstance(doc, Mapping):
        raise ParseError("descriptor document must be a JSON object")

    violations: list[Violation] = []

    name = doc.get("waveform_name")
    if not isinstance(name, str) or not name:
        violations.append(Violation("MissingField", "waveform_name", "waveform_name required"))
        name = ""

    version = doc.get("schema_version")
    if version is None:
        violations.append(Violation("MissingField", "schema_version", "schema_version required"))
        version = SCHEMA_VERSION
    elif not _is_integral(version):
        violations.append(Violation("BadType", "schema_version", "schema_version must be an integer"))
        version = SCHEMA_VERSION

    category = doc.get("category")
    if category is None:
        violations.append(Violation("MissingField", "category", "category required"))
        category = ""
    elif category not in CATEGORIES:
        violations.append(
            Violation("BadCategory", "category", f"category must be one of {CATEGORIES}")
        )

    mode = doc.get("execution_mode")
    if mode is None:
        violations.append(Violation("MissingField", "execution_mode", "execution_mode required"))
        mode = ""
    elif mode not in EXECUTION_MODES:
        violations.append(
            Violation("BadType", "execution_mode", f"execution_mode must be one of {EXECUTION_MODES}")
        )

    raw_params = doc.get("parameters")
    params: list[ParameterDef] = []
    if raw_params is None:
        violations.append(Violation("MissingField", "parameters", "parameters required"))
    elif not isinstance(raw_params, (list, tuple)):
        violations.append(Violation("BadType", "parameters", "parameters must be a list"))
    else:
        seen: set = set()
        for i, rp in enumerate(raw_params):
            pd = _validate_parameter(rp, i, seen, violations)
            if pd is not None:
                params.append(pd)

    binding = doc.get("generator_binding")
    if binding is not None and not isinstance(binding, str):
        violations.append(Violation("BadType", "generator_binding", "binding must be a string"))
        binding = None

    if violations:
        return ValidationReport(tuple(violations))
    return WaveformDescriptor(
        waveform_name=name,
        category=category,
        execution_mode=mode,
        parameters=tuple(params),
        schema_version=int(version),
        generator_binding=binding,
    )


def serialize_descriptor(desc: WaveformDescriptor) -> dict:
    """Normalized wire form; validate_descriptor(serialize(d)) == d."""
    doc: dict[str, Any] = {
        "schema_version": desc.schema_version,
        "waveform_name": desc.waveform_name,
        "category": desc.category,
        "execution_mode": desc.execution_mode,
        "parameters": [],
    }
    for p in desc.parameters:
        entry: dict[str, Any] = {"name": p.name, "kind": p.kind, "units": p.units}
        if p.kind == "enumerated":
            entry["values"] = list(p.values)
        else:
            entry["range"] = list(p.range)
        entry["default"] = p.default
        doc["parameters"].append(entry)
    if desc.generator_binding is not None:
        doc["generator_binding"] = desc.generator_binding
    return doc


@dataclass
class RegistryEntry:
    descriptor: WaveformDescriptor
    binding: Binding


class WaveformRegistry:
    """Validated waveform store mapping names to descriptor + implementation."""

    def __init__(self, bindings: Mapping[str, Binding] | None = None):
        self._bindings = dict(bindings if bindings is not None else BUILTIN_BINDINGS)
        self._entries: dict[str, RegistryEntry] = {}
        self._lock = threading.Lock()

    def register(
        self,
        descriptor: WaveformDescriptor | Mapping | str,
        generator_binding: str | None = None,
    ) -> str:
        """Register a descriptor against an available implementation.

        Returns the registry id (the waveform name). Raises DuplicateError,
        CompatibilityError, or UnknownWaveform; invalid descriptor documents
        raise ValueError carrying the ValidationReport.
        """
        if not isinstance(descriptor, WaveformDescriptor):
            result = validate_descriptor(descriptor)
            if isinstance(result, ValidationReport):
                err = ValueError(f"invalid descriptor: {result.codes()}")
                err.report = result
                raise err
            descriptor = result
        binding_id = generator_binding or descriptor.generator_binding or descriptor.waveform_name
        binding = self._bindings.get(binding_id)
        if binding is None:
            raise UnknownWaveform(binding_id)
        if binding.category != descriptor.category:
            raise CompatibilityError(
                f"descriptor {descriptor.waveform_name!r} declares {descriptor.category} "
                f"but binding {binding_id!r} provides the {binding.category} chain"
            )
        with self._lock:
            if descriptor.waveform_name in self._entries:
                raise DuplicateError(descriptor.waveform_name)
            self._entries[descriptor.waveform_name] = RegistryEntry(descriptor, binding)
        return descriptor.waveform_name

    def list_waveforms(self) -> list[str]:
        with self._lock:
            return list(self._entries)

    def get(self, waveform_id: str) -> WaveformDescriptor:
        try:
            return self._entries[waveform_id].descriptor
        except KeyError:
            raise UnknownWaveform(waveform_id) from None

    def binding_of(self, waveform_id: str) -> Binding:
        try:
            return self._entries[waveform_id].binding
        except KeyError:
            raise UnknownWaveform(waveform_id) from None

    def validate_params(
        self, waveform_id: str, values: Mapping[str, Any]
    ) -> dict | ValidationReport:
        """Type- and range-check a parameter map against the descriptor.

        Missing values fill from defaults; unknown names are rejected.
        Returns the normalized map or a report listing every violation.
        """
        desc = self.get(waveform_id)
        violations: list[Violation] = []
        known = {p.name: p for p in desc.parameters}
        for name in values:
            if name not in known:
                violations.append(
                    Violation("UnknownName", name, f"{name!r} is not a parameter of {waveform_id}")
                )
        normalized: dict[str, Any] = {}
        for p in desc.parameters:
            if p.name not in values:
                normalized[p.name] = p.default
                continue
            v = values[p.name]
            if p.kind == "integer":
                if not _is_integral(v):
                    violations.append(
                        Violation("BadType", p.name, f"{p.name} must be an integer, got {v!r}")
                    )
                    continue
                v = int(v)
            elif p.kind == "float":
                if not _is_number(v):
                    violations.append(
                        Violation("BadType", p.name, f"{p.name} must be numeric, got {v!r}")
                    )
                    continue
                v = float(v)
            if not p.contains(v):
                domain = p.values if p.kind == "enumerated" else p.range
                violations.append(
                    Violation("RangeViolation", p.name, f"{v!r} outside {domain}")
                )
                continue
            normalized[p.name] = v
        if violations:
            return ValidationReport(tuple(violations))
        return normalized

    def form_spec(self, waveform_id: str) -> FormSpec:
        """Widget list bijective with the descriptor's parameters."""
        desc = self.get(waveform_id)
        widgets = tuple(
            Widget(
                label=p.name,
                kind=_WIDGET_KIND[p.kind],
                units=p.units,
                default=p.default,
                range=p.range,
                options=p.values,
            )
            for p in desc.parameters
        )
        return FormSpec(desc.waveform_name, widgets)

    def make_generator(
        self, waveform_id: str, params: Mapping[str, Any], ctx: GenContext
    ) -> StreamingGenerator:
        entry_binding = self.binding_of(waveform_id)
        return entry_binding.factory(dict(params), ctx)


def load_descriptor_file(path: Path | str) -> WaveformDescriptor | ValidationReport:
    return validate_descriptor(Path(path).read_text(encoding="utf-8"))


def load_builtins(registry: WaveformRegistry, waveform_dir: Path | str) -> list[str]:
    """Register every descriptor JSON shipped in the waveform directory."""
    ids = []
    for path in sorted(Path(waveform_dir).glob("*.json")):
        desc = load_descriptor_file(path)
        if isinstance(desc, ValidationReport):
            raise ValueError(f"shipped descriptor {path.name} is invalid: {desc.codes()}")
        ids.append(registry.register(desc))
    return ids
