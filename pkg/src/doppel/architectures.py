"""Synth architecture definitions: parameter tables, routing, and JSON loading.

Architectures are shipped as versioned JSON documents under
``doppel/architectures/``. Each document has the schema::

    {
      "schema_version": 1,
      "name": "Voice",                  # architecture name
      "version": "v1",                  # spec file version
      "modules": [{"name": "adsr_1", "kind": "adsr"}, ...],
      "routing": [["adsr_1.out", "mod_matrix.in_adsr_1"], ...],
      "param_table": [
        {"name": "adsr_1.attack", "module": "adsr_1",
         "min": 0.0, "max": 2.0, "curve": "exp"},
        ...
      ]
    }

``param_table`` order is authoritative: column ``j`` of a normalized parameter
matrix maps to ``param_table[j]``. Curves translate the normalized [0, 1]
coordinate into natural units:

    linear  v = min + (max - min) * x
    log     v = min * (max / min) ** x          (frequency-like, min > 0)
    exp     v = min + (max - min) * x ** 2      (time-like, short-end emphasis)

``build_architecture`` parses the shipped file and validates the invariants
(parameter count, min < max, mapping round-trip, acyclic routing). Run
``python -m doppel.architectures regen`` to rewrite the JSON files from the
builder functions in this module.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass
from importlib import resources

import numpy as np

SCHEMA_VERSION = 1

ARCHITECTURE_NAMES = ("Voice", "VoiceFM", "ParametricSynth")

# Pinned by the published designs these graphs follow.
PARAM_COUNTS = {"Voice": 78, "VoiceFM": 130, "ParametricSynth": 340}

_CURVES = ("linear", "log", "exp")


@dataclass(frozen=True)
class ParamSpec:
    """One row of a parameter table: natural range and mapping curve."""

    name: str
    module: str
    min: float
    max: float
    curve: str


@dataclass(frozen=True)
class ModuleSpec:
    name: str
    kind: str


@dataclass(frozen=True)
class ArchitectureSpec:
    """Immutable description of a synth graph.

    ``m_s`` (the normalized parameter space dimension) equals
    ``len(param_table)``.
    """

    name: str
    version: str
    modules: tuple[ModuleSpec, ...]
    routing: tuple[tuple[str, str], ...]
    param_table: tuple[ParamSpec, ...]

    @property
    def m_s(self) -> int:
        return len(self.param_table)

    def param_index(self, name: str) -> int:
        try:
            return self._index[name]
        except AttributeError:
            index = {p.name: j for j, p in enumerate(self.param_table)}
            object.__setattr__(self, "_index", index)
            return index[name]

    def module_params(self, module: str) -> list[int]:
        """Column indices of all parameters belonging to ``module``."""
        return [j for j, p in enumerate(self.param_table) if p.module == module]

    def denormalize(self, values: np.ndarray) -> np.ndarray:
        """Map normalized [0, 1] columns to natural units."""
        values = np.asarray(values, dtype=np.float64)
        out = np.empty_like(values)
        for j, p in enumerate(self.param_table):
            out[..., j] = _denorm(values[..., j], p)
        return out

    def normalize(self, values: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`denormalize`."""
        values = np.asarray(values, dtype=np.float64)
        out = np.empty_like(values)
        for j, p in enumerate(self.param_table):
            out[..., j] = _norm(values[..., j], p)
        return out

    def denormalize_param(self, values: np.ndarray, name: str) -> np.ndarray:
        return _denorm(np.asarray(values, dtype=np.float64),
                       self.param_table[self.param_index(name)])


def _denorm(x, p: ParamSpec):
    if p.curve == "linear":
        return p.min + (p.max - p.min) * x
    if p.curve == "log":
        return p.min * (p.max / p.min) ** x
    if p.curve == "exp":
        return p.min + (p.max - p.min) * x * x
    raise ValueError(f"unknown curve {p.curve!r}")


def _norm(v, p: ParamSpec):
    if p.curve == "linear":
        return (v - p.min) / (p.max - p.min)
    if p.curve == "log":
        return np.log(v / p.min) / math.log(p.max / p.min)
    if p.curve == "exp":
        return np.sqrt((v - p.min) / (p.max - p.min))
    raise ValueError(f"unknown curve {p.curve!r}")


# ---------------------------------------------------------------------------
# Table builders. These generate the shipped JSON; build_architecture() reads
# the JSON back so external edits to the files are honored.
# ---------------------------------------------------------------------------

_PI = math.pi

# Canonical per-kind parameter complements (name, min, max, curve).
_KIND_PARAMS = {
    "keyboard": [
        ("midi_f0", 36.0, 96.0, "linear"),
        ("duration", 0.05, 2.0, "exp"),
    ],
    "adsr": [
        ("attack", 0.0, 2.0, "exp"),
        ("decay", 0.0, 2.0, "exp"),
        ("sustain", 0.0, 1.0, "linear"),
        ("release", 0.0, 2.0, "exp"),
        ("curve_alpha", 0.1, 6.0, "log"),
    ],
    "lfo": [
        ("freq_hz", 0.1, 20.0, "log"),
        ("mod_depth", 0.0, 1.0, "linear"),
        ("initial_phase", -_PI, _PI, "linear"),
        ("w_sine", 0.0, 1.0, "linear"),
        ("w_tri", 0.0, 1.0, "linear"),
        ("w_saw", 0.0, 1.0, "linear"),
        ("w_rsaw", 0.0, 1.0, "linear"),
        ("w_square", 0.0, 1.0, "linear"),
    ],
    "sine_vco": [
        ("tuning", -24.0, 24.0, "linear"),
        ("mod_depth", -96.0, 96.0, "linear"),
        ("initial_phase", -_PI, _PI, "linear"),
    ],
    "square_saw_vco": [
        ("tuning", -24.0, 24.0, "linear"),
        ("mod_depth", -96.0, 96.0, "linear"),
        ("initial_phase", -_PI, _PI, "linear"),
        ("shape", 0.0, 1.0, "linear"),
    ],
    "fm_sine": [
        ("tuning", -24.0, 24.0, "linear"),
        ("mod_depth", -96.0, 96.0, "linear"),
        ("initial_phase", -_PI, _PI, "linear"),
        ("index_max", 0.0, 8.0, "linear"),
    ],
    "fm_square_saw": [
        ("tuning", -24.0, 24.0, "linear"),
        ("mod_depth", -96.0, 96.0, "linear"),
        ("initial_phase", -_PI, _PI, "linear"),
        ("index_max", 0.0, 8.0, "linear"),
        ("shape", 0.0, 1.0, "linear"),
    ],
    "noise": [],
}


class _Builder:
    def __init__(self, name: str, version: str):
        self.name = name
        self.version = version
        self.modules: list[dict] = []
        self.routing: list[list[str]] = []
        self.params: list[dict] = []

    def module(self, name: str, kind: str):
        self.modules.append({"name": name, "kind": kind})
        for pname, lo, hi, curve in _KIND_PARAMS[kind]:
            self.params.append({"name": f"{name}.{pname}", "module": name,
                                "min": lo, "max": hi, "curve": curve})

    def mod_matrix(self, sources: list[str], dests: list[str]):
        self.modules.append({"name": "mod_matrix", "kind": "mod_matrix",
                             "sources": sources, "dests": dests})
        for s in sources:
            self.route(f"{s}.out", f"mod_matrix.in_{s}")
        for s in sources:
            for d in dests:
                self.params.append({
                    "name": f"mod_matrix.gain_{s}__{d}", "module": "mod_matrix",
                    "min": 0.0, "max": 1.0, "curve": "linear"})

    def mixer(self, inputs: list[str]):
        self.modules.append({"name": "mixer", "kind": "mixer", "inputs": inputs})
        for m in inputs:
            self.route(f"{m}.out", f"mixer.in_{m}")
            self.params.append({"name": f"mixer.level_{m}", "module": "mixer",
                                "min": 0.0, "max": 1.0, "curve": "linear"})
        self.route("mixer.out", "output.main")

    def route(self, src: str, dst: str):
        self.routing.append([src, dst])

    def document(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "version": self.version,
            "modules": self.modules,
            "routing": self.routing,
            "param_table": self.params,
        }


def _voice_core(b: _Builder) -> None:
    """Keyboard, two general envelopes, two LFOs with amp/rate envelopes,
    sine + square-saw VCOs, and a noise source."""
    b.module("keyboard", "keyboard")
    b.module("adsr_1", "adsr")
    b.module("adsr_2", "adsr")
    b.module("lfo_1", "lfo")
    b.module("lfo_2", "lfo")
    b.module("lfo_1_amp_adsr", "adsr")
    b.module("lfo_1_rate_adsr", "adsr")
    b.module("lfo_2_amp_adsr", "adsr")
    b.module("lfo_2_rate_adsr", "adsr")
    b.module("vco_1", "sine_vco")
    b.module("vco_2", "square_saw_vco")
    b.module("noise", "noise")
    for lfo in ("lfo_1", "lfo_2"):
        b.route("keyboard.gate", f"{lfo}_amp_adsr.gate")
        b.route("keyboard.gate", f"{lfo}_rate_adsr.gate")
        b.route(f"{lfo}_amp_adsr.out", f"{lfo}.amp")
        b.route(f"{lfo}_rate_adsr.out", f"{lfo}.rate")
    b.route("keyboard.gate", "adsr_1.gate")
    b.route("keyboard.gate", "adsr_2.gate")
    b.route("keyboard.midi", "vco_1.midi_f0")
    b.route("keyboard.midi", "vco_2.midi_f0")


def _voice() -> dict:
    b = _Builder("Voice", "v1")
    _voice_core(b)
    b.mod_matrix(sources=["adsr_1", "adsr_2", "lfo_1", "lfo_2"],
                 dests=["vco_1_pitch", "vco_1_amp", "vco_2_pitch",
                        "vco_2_amp", "noise_amp"])
    for d, port in (("vco_1_pitch", "vco_1.pitch_mod"),
                    ("vco_1_amp", "vco_1.amp"),
                    ("vco_2_pitch", "vco_2.pitch_mod"),
                    ("vco_2_amp", "vco_2.amp"),
                    ("noise_amp", "noise.amp")):
        b.route(f"mod_matrix.out_{d}", port)
    b.mixer(["vco_1", "vco_2", "noise"])
    return b.document()


def _voice_fm() -> dict:
    b = _Builder("VoiceFM", "v1")
    _voice_core(b)
    # FM section: a sine operator phase-modulating vco_1, with its own LFO
    # (plus amp/rate envelopes) and dedicated index/pitch/amp envelopes.
    b.module("fm_lfo", "lfo")
    b.module("fm_lfo_amp_adsr", "adsr")
    b.module("fm_lfo_rate_adsr", "adsr")
    b.module("fm_index_adsr", "adsr")
    b.module("fm_pitch_adsr", "adsr")
    b.module("fm_amp_adsr", "adsr")
    b.module("fm_op", "fm_sine")
    b.route("keyboard.gate", "fm_lfo_amp_adsr.gate")
    b.route("keyboard.gate", "fm_lfo_rate_adsr.gate")
    b.route("fm_lfo_amp_adsr.out", "fm_lfo.amp")
    b.route("fm_lfo_rate_adsr.out", "fm_lfo.rate")
    for adsr in ("fm_index_adsr", "fm_pitch_adsr", "fm_amp_adsr"):
        b.route("keyboard.gate", f"{adsr}.gate")
    b.route("keyboard.midi", "fm_op.midi_f0")
    b.route("fm_index_adsr.out", "fm_op.index_mod")
    b.route("fm_pitch_adsr.out", "fm_op.pitch_mod")
    b.route("fm_amp_adsr.out", "fm_op.amp")
    b.route("fm_op.out", "vco_1.phase_mod")
    b.mod_matrix(sources=["adsr_1", "adsr_2", "lfo_1", "lfo_2", "fm_lfo"],
                 dests=["vco_1_pitch", "vco_1_amp", "vco_2_pitch",
                        "vco_2_amp", "noise_amp", "fm_pitch", "fm_index"])
    for d, port in (("vco_1_pitch", "vco_1.pitch_mod"),
                    ("vco_1_amp", "vco_1.amp"),
                    ("vco_2_pitch", "vco_2.pitch_mod"),
                    ("vco_2_amp", "vco_2.amp"),
                    ("noise_amp", "noise.amp"),
                    ("fm_pitch", "fm_op.pitch_mod"),
                    ("fm_index", "fm_op.index_mod")):
        b.route(f"mod_matrix.out_{d}", port)
    b.mixer(["vco_1", "vco_2", "noise"])
    return b.document()


def _parametric() -> dict:
    b = _Builder("ParametricSynth", "v1")
    b.module("keyboard", "keyboard")
    for i in range(1, 6):
        b.module(f"adsr_{i}", "adsr")
        b.route("keyboard.gate", f"adsr_{i}.gate")
    for i in range(1, 6):
        b.module(f"lfo_{i}", "lfo")
        b.module(f"lfo_{i}_amp_adsr", "adsr")
        b.module(f"lfo_{i}_rate_adsr", "adsr")
        b.route("keyboard.gate", f"lfo_{i}_amp_adsr.gate")
        b.route("keyboard.gate", f"lfo_{i}_rate_adsr.gate")
        b.route(f"lfo_{i}_amp_adsr.out", f"lfo_{i}.amp")
        b.route(f"lfo_{i}_rate_adsr.out", f"lfo_{i}.rate")
    # Oscillator complement: 2 sine, 2 square-saw, 1 sine FM, 1 square-saw FM,
    # plus a noise source. FM operators phase-modulate the first VCO of their
    # waveform family; every audio chain has a dedicated amplitude envelope.
    b.module("sine_1", "sine_vco")
    b.module("sine_2", "sine_vco")
    b.module("sqsaw_1", "square_saw_vco")
    b.module("sqsaw_2", "square_saw_vco")
    b.module("fm_sine", "fm_sine")
    b.module("fm_sqsaw", "fm_square_saw")
    b.module("noise", "noise")
    for osc in ("sine_1", "sine_2", "sqsaw_1", "sqsaw_2", "fm_sine", "fm_sqsaw"):
        b.route("keyboard.midi", f"{osc}.midi_f0")
    b.route("fm_sine.out", "sine_1.phase_mod")
    b.route("fm_sqsaw.out", "sqsaw_1.phase_mod")
    for chain in ("sine_1", "sine_2", "sqsaw_1", "sqsaw_2", "noise"):
        b.module(f"{chain}_amp_adsr", "adsr")
        b.route("keyboard.gate", f"{chain}_amp_adsr.gate")
        b.route(f"{chain}_amp_adsr.out", f"{chain}.amp")
    for op in ("fm_sine", "fm_sqsaw"):
        b.module(f"{op}_index_adsr", "adsr")
        b.route("keyboard.gate", f"{op}_index_adsr.gate")
        b.route(f"{op}_index_adsr.out", f"{op}.index_mod")
    dests = ["sine_1_pitch", "sine_2_pitch", "sqsaw_1_pitch", "sqsaw_2_pitch",
             "sine_1_amp", "sine_2_amp", "sqsaw_1_amp", "sqsaw_2_amp",
             "noise_amp", "sqsaw_1_shape", "sqsaw_2_shape",
             "fm_sine_pitch", "fm_sine_index",
             "fm_sqsaw_pitch", "fm_sqsaw_index", "fm_sqsaw_shape"]
    b.mod_matrix(sources=[f"adsr_{i}" for i in range(1, 6)]
                 + [f"lfo_{i}" for i in range(1, 6)],
                 dests=dests)
    for d in dests:
        mod, _, port = d.rpartition("_")
        portmap = {"pitch": "pitch_mod", "amp": "amp",
                   "shape": "shape_mod", "index": "index_mod"}
        b.route(f"mod_matrix.out_{d}", f"{mod}.{portmap[port]}")
    b.mixer(["sine_1", "sine_2", "sqsaw_1", "sqsaw_2", "noise"])
    return b.document()


_BUILDERS = {"Voice": _voice, "VoiceFM": _voice_fm, "ParametricSynth": _parametric}


# ---------------------------------------------------------------------------
# Loading and validation
# ---------------------------------------------------------------------------

def _spec_filename(name: str) -> str:
    return f"{name.lower()}-v1.json"


def _validate(doc: dict) -> None:
    name = doc["name"]
    want = PARAM_COUNTS[name]
    got = len(doc["param_table"])
    if got != want:
        raise ValueError(f"{name}: parameter count {got}, expected {want}")
    for p in doc["param_table"]:
        if not p["min"] < p["max"]:
            raise ValueError(f"{p['name']}: min must be < max")
        if p["curve"] not in _CURVES:
            raise ValueError(f"{p['name']}: unknown curve {p['curve']!r}")
        if p["curve"] == "log" and p["min"] <= 0:
            raise ValueError(f"{p['name']}: log curve needs min > 0")
    _check_acyclic(doc)


def _check_acyclic(doc: dict) -> None:
    """Control routing must be a DAG from sources down to the mixer."""
    nodes = {m["name"] for m in doc["modules"]} | {"output"}
    edges = set()
    for src, dst in doc["routing"]:
        a, b = src.split(".")[0], dst.split(".")[0]
        if a not in nodes or b not in nodes:
            raise ValueError(f"routing references unknown module: {src} -> {dst}")
        if a != b:
            edges.add((a, b))
    # Kahn topological sort.
    indeg = {n: 0 for n in nodes}
    for _, b in edges:
        indeg[b] += 1
    queue = [n for n, d in indeg.items() if d == 0]
    seen = 0
    while queue:
        n = queue.pop()
        seen += 1
        for a, b in list(edges):
            if a == n:
                edges.discard((a, b))
                indeg[b] -= 1
                if indeg[b] == 0:
                    queue.append(b)
    if seen != len(nodes):
        raise ValueError("routing graph has a cycle")


def _parse(doc: dict) -> ArchitectureSpec:
    _validate(doc)
    return ArchitectureSpec(
        name=doc["name"],
        version=doc["version"],
        modules=tuple(ModuleSpec(m["name"], m["kind"]) for m in doc["modules"]),
        routing=tuple((src, dst) for src, dst in doc["routing"]),
        param_table=tuple(
            ParamSpec(p["name"], p["module"], float(p["min"]), float(p["max"]),
                      p["curve"])
            for p in doc["param_table"]),
    )


def build_architecture(name: str) -> ArchitectureSpec:
    """Load and validate the shipped spec for one of the three architectures."""
    if name not in ARCHITECTURE_NAMES:
        raise ValueError(
            f"unknown architecture {name!r}; expected one of {ARCHITECTURE_NAMES}")
    path = resources.files("doppel") / "architectures" / _spec_filename(name)
    doc = json.loads(path.read_text())
    return _parse(doc)


def generated_document(name: str) -> dict:
    """The architecture document as produced by the in-code builders
    (used by regen and the JSON-sync test)."""
    return _BUILDERS[name]()


def _regen(out_dir=None) -> None:
    from pathlib import Path

    out = Path(out_dir) if out_dir else Path(__file__).parent / "architectures"
    out.mkdir(parents=True, exist_ok=True)
    for name in ARCHITECTURE_NAMES:
        target = out / _spec_filename(name)
        target.write_text(json.dumps(generated_document(name), indent=1) + "\n")
        print(f"wrote {target}")


if __name__ == "__main__":
    if len(sys.argv) > 1 and sys.argv[1] == "regen":
        _regen(*sys.argv[2:])
    else:
        print("usage: python -m doppel.architectures regen [out_dir]")
