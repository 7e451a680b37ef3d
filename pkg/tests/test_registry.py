import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stormbench.errors import (
    CompatibilityError,
    DuplicateError,
    ParseError,
    UnknownWaveform,
)
from stormbench.locate import default_waveform_dir
from stormbench.registry import (
    ValidationReport,
    WaveformDescriptor,
    WaveformRegistry,
    load_builtins,
    load_descriptor_file,
    serialize_descriptor,
    validate_descriptor,
)


def make_doc(**overrides):
    doc = {
        "schema_version": 1,
        "waveform_name": "custom_tone",
        "category": "narrowband",
        "execution_mode": "direct_graph",
        "parameters": [
            {
                "name": "center_frequency",
                "kind": "float",
                "range": [70e6, 6.0e9],
                "units": "Hz",
                "default": 2.45e9,
            },
            {"name": "gain", "kind": "float", "range": [5, 25], "units": "dB", "default": 10},
        ],
    }
    doc.update(overrides)
    return doc


@pytest.fixture
def registry():
    reg = WaveformRegistry()
    load_builtins(reg, default_waveform_dir())
    return reg


# ---------------------------------------------------------------------------
# descriptor validation


def test_missing_name_reported():
    doc = make_doc()
    del doc["waveform_name"]
    rep = validate_descriptor(doc)
    assert isinstance(rep, ValidationReport)
    assert rep.codes() == ["MissingField"]
    assert rep.violations[0].field == "waveform_name"


def test_default_out_of_platform_range():
    # center_frequency default above the 70 MHz - 6 GHz coverage
    doc = make_doc()
    doc["parameters"][0]["default"] = 7.0e9
    rep = validate_descriptor(doc)
    assert rep.codes() == ["DefaultOutOfRange"]


def test_bad_category():
    rep = validate_descriptor(make_doc(category="ultrawideband"))
    assert rep.codes() == ["BadCategory"]


def test_parse_error_on_bad_json():
    with pytest.raises(ParseError):
        validate_descriptor("{not json")


def test_k_faults_exactly_k_entries():
    # three independent faults -> exactly three violations
    doc = make_doc(category="ultrawideband")
    del doc["waveform_name"]
    doc["parameters"][1]["default"] = 40  # gain outside [5, 25]
    rep = validate_descriptor(doc)
    assert len(rep.violations) == 3
    assert sorted(rep.codes()) == ["BadCategory", "DefaultOutOfRange", "MissingField"]


def test_five_faults_exactly_five_entries():
    doc = make_doc(category="x", execution_mode="warp")
    del doc["schema_version"]
    doc["parameters"][0]["range"] = [6e9, 70e6]  # min > max
    doc["parameters"].append(
        {"name": "gain", "kind": "float", "range": [0, 1], "units": "", "default": 0.5}
    )  # duplicate name
    rep = validate_descriptor(doc)
    assert len(rep.violations) == 5


def test_duplicate_parameter_name():
    doc = make_doc()
    doc["parameters"].append(dict(doc["parameters"][0]))
    rep = validate_descriptor(doc)
    assert rep.codes() == ["DuplicateName"]


def test_validation_idempotent_round_trip():
    desc = validate_descriptor(make_doc())
    assert isinstance(desc, WaveformDescriptor)
    again = validate_descriptor(serialize_descriptor(desc))
    assert again == desc
    # serialization is stable too
    assert serialize_descriptor(again) == serialize_descriptor(desc)


def test_validate_descriptor_has_no_side_effects():
    doc = make_doc()
    snapshot = json.dumps(doc, sort_keys=True)
    validate_descriptor(doc)
    assert json.dumps(doc, sort_keys=True) == snapshot


# ---------------------------------------------------------------------------
# shipped descriptors (CI gate)


def test_every_builtin_descriptor_validates():
    paths = sorted(default_waveform_dir().glob("*.json"))
    assert len(paths) == 9
    for path in paths:
        desc = load_descriptor_file(path)
        assert isinstance(desc, WaveformDescriptor), f"{path.name} failed validation"


def test_builtins_register_and_list(registry):
    names = set(registry.list_waveforms())
    assert {
        "baseline",
        "baseline_direct",
        "am",
        "fm",
        "freq_hop",
        "freq_sweep",
        "dsss",
        "ofdm",
        "otfs",
    } == names


# ---------------------------------------------------------------------------
# registration


def test_register_category_match(registry):
    desc = validate_descriptor(
        make_doc(waveform_name="my_ofdm", category="wideband", execution_mode="composed_base_chain")
    )
    rid = registry.register(desc, "ofdm")
    assert rid == "my_ofdm"
    assert "my_ofdm" in registry.list_waveforms()


def test_register_category_mismatch(registry):
    desc = validate_descriptor(make_doc(waveform_name="bad_cat", category="narrowband"))
    with pytest.raises(CompatibilityError):
        registry.register(desc, "ofdm")


def test_register_duplicate(registry):
    desc = validate_descriptor(make_doc(waveform_name="dup", category="narrowband"))
    registry.register(desc, "am")
    with pytest.raises(DuplicateError):
        registry.register(desc, "am")


def test_register_unknown_binding(registry):
    desc = validate_descriptor(make_doc(waveform_name="nobind"))
    with pytest.raises(UnknownWaveform):
        registry.register(desc, "does_not_exist")


def test_register_invalid_document_carries_report(registry):
    with pytest.raises(ValueError) as exc:
        registry.register(make_doc(category="nope"), "am")
    assert exc.value.report.codes() == ["BadCategory"]


# ---------------------------------------------------------------------------
# parameter validation


def test_gain_range_violation(registry):
    rep = registry.validate_params("baseline", {"gain": 26})
    assert isinstance(rep, ValidationReport)
    assert rep.codes() == ["RangeViolation"]


def test_empty_map_fills_defaults(registry):
    vals = registry.validate_params("baseline", {})
    assert vals == {
        "center_frequency": 2.45e9,
        "gain": 10.0,
        "modulation": "QPSK",
        "symbol_rate": 62500.0,
    }


def test_float_for_integer_kind(registry):
    rep = registry.validate_params("dsss", {"chips_per_symbol": 31.5})
    assert isinstance(rep, ValidationReport)
    assert "BadType" in rep.codes()


def test_unknown_parameter_rejected(registry):
    rep = registry.validate_params("baseline", {"bandwidth": 1e6})
    assert isinstance(rep, ValidationReport)
    assert rep.codes() == ["UnknownName"]


def test_inclusive_range_ends(registry):
    assert registry.validate_params("baseline", {"gain": 5})["gain"] == 5.0
    assert registry.validate_params("baseline", {"gain": 25})["gain"] == 25.0


def test_enumerated_value_checked(registry):
    rep = registry.validate_params("baseline", {"modulation": "256QAM"})
    assert isinstance(rep, ValidationReport)
    assert rep.codes() == ["RangeViolation"]


# ---------------------------------------------------------------------------
# form specs


def test_baseline_form_four_widgets(registry):
    form = registry.form_spec("baseline")
    assert [w.label for w in form.widgets] == [
        "center_frequency",
        "gain",
        "modulation",
        "symbol_rate",
    ]


def test_form_bijection_all_builtins(registry):
    for name in registry.list_waveforms():
        desc = registry.get(name)
        form = registry.form_spec(name)
        assert len(form.widgets) == len(desc.parameters)
        for w, p in zip(form.widgets, desc.parameters):
            assert w.label == p.name
            assert w.units == p.units
            assert w.default == p.default


def test_enumerated_becomes_dropdown(registry):
    form = registry.form_spec("baseline")
    mod = form.widgets[2]
    assert mod.kind == "dropdown"
    assert mod.options == ("BPSK", "QPSK", "8QAM", "16QAM", "64QAM")


def test_zero_parameter_descriptor_empty_form(registry):
    desc = validate_descriptor(
        make_doc(waveform_name="fixed_wave", parameters=[], category="narrowband")
    )
    registry.register(desc, "am")
    assert registry.form_spec("fixed_wave").widgets == ()


def test_form_unknown_id(registry):
    with pytest.raises(UnknownWaveform):
        registry.form_spec("ghost")


# ---------------------------------------------------------------------------
# properties


@given(
    st.floats(min_value=70e6, max_value=6e9, allow_nan=False),
    st.floats(min_value=5, max_value=25, allow_nan=False),
)
@settings(max_examples=50, deadline=None)
def test_descriptor_round_trip_property(freq_default, gain_default):
    doc = make_doc()
    doc["parameters"][0]["default"] = freq_default
    doc["parameters"][1]["default"] = gain_default
    desc = validate_descriptor(doc)
    assert isinstance(desc, WaveformDescriptor)
    assert validate_descriptor(serialize_descriptor(desc)) == desc
