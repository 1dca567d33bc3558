import dataclasses
import json
from pathlib import Path

import numpy as np
import pytest

from doppel.architectures import (ARCHITECTURE_NAMES, PARAM_COUNTS,
                                  build_architecture, generated_document,
                                  _check_acyclic, _spec_filename)


@pytest.mark.parametrize("name,count", [("Voice", 78), ("VoiceFM", 130),
                                        ("ParametricSynth", 340)])
def test_parameter_counts(name, count):
    assert build_architecture(name).m_s == count


def test_unknown_architecture_rejected():
    with pytest.raises(ValueError, match="unknown architecture"):
        build_architecture("MegaSynth")


def test_spec_is_frozen():
    spec = build_architecture("Voice")
    with pytest.raises(dataclasses.FrozenInstanceError):
        spec.name = "Other"


@pytest.mark.parametrize("name", ARCHITECTURE_NAMES)
def test_normalize_denormalize_roundtrip(name, rng):
    spec = build_architecture(name)
    x = rng.uniform(size=(16, spec.m_s))
    back = spec.normalize(spec.denormalize(x))
    assert np.abs(back - x).max() < 1e-6


@pytest.mark.parametrize("name", ARCHITECTURE_NAMES)
def test_ranges_ordered(name):
    spec = build_architecture(name)
    for p in spec.param_table:
        assert p.min < p.max, p.name


@pytest.mark.parametrize("name", ARCHITECTURE_NAMES)
def test_shipped_json_matches_builders(name):
    path = (Path(__file__).resolve().parents[1] / "src" / "doppel"
            / "architectures" / _spec_filename(name))
    assert json.loads(path.read_text()) == generated_document(name)


def test_param_counts_match_documented_constants():
    for name in ARCHITECTURE_NAMES:
        assert len(generated_document(name)["param_table"]) == PARAM_COUNTS[name]


def test_cycle_detection_rejects_loop():
    doc = {
        "modules": [{"name": "a", "kind": "adsr"}, {"name": "b", "kind": "adsr"}],
        "routing": [["a.out", "b.gate"], ["b.out", "a.gate"]],
    }
    with pytest.raises(ValueError, match="cycle"):
        _check_acyclic(doc)


@pytest.mark.parametrize("name", ARCHITECTURE_NAMES)
def test_routing_is_acyclic(name):
    # build_architecture validates; loading without error is the assertion
    spec = build_architecture(name)
    assert spec.routing


def test_curve_shapes():
    spec = build_architecture("Voice")
    # log curve: LFO frequency endpoints hit the range bounds
    lo = spec.denormalize_param(np.array(0.0), "lfo_1.freq_hz")
    hi = spec.denormalize_param(np.array(1.0), "lfo_1.freq_hz")
    assert lo == pytest.approx(0.1) and hi == pytest.approx(20.0)
    # exp curve emphasizes short times: midpoint lands below the linear middle
    mid = spec.denormalize_param(np.array(0.5), "adsr_1.attack")
    assert mid < 0.5 * (0.0 + 2.0)
