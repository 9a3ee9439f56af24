"""Declarative experiment descriptions and the pipeline that runs them.

A scenario is a JSON document validated against ``data/scenario.schema.json``.
Running it samples an initial ensemble, propagates it under every requested
current, and writes figure-ready CSV tables plus ``metadata.json``.
"""

import copy
import csv
from dataclasses import dataclass, field
import hashlib
import io
import json
import math
import os
import platform
import shutil
import tempfile
import time
from importlib import resources

import jsonschema
import numpy as np
import scipy
from scipy import constants as sc

from . import __version__
from .guidance import CurrentKind, default_current
from .propagate import IntegratorConfig, propagate_ensemble
from .sampling import RNG_NAME, SamplerConfig, sample_initial
from .states import (GaussianPacket, HO3DDegenerate, HOSuperposition, PacketSuperposition,
                     PhysicalConstants, SpinorRamsey, SpinorWeakField)
from .stats import classical_momentum_variance, convergence_sweep, ensemble_moments, lyapunov

TESLA_PER_ATOMIC_UNIT = sc.physical_constants["atomic unit of mag. flux density"][0]
DEFAULT_OUT_ENV = "BOHMSTAT_OUT"


class ScenarioError(ValueError):
    """Invalid scenario text: syntax, schema or cross-field constraint."""

    def __init__(self, message, path=None, line=None, column=None):
        where = ""
        if path:
            where = " at " + "/".join(str(p) for p in path)
        elif line is not None:
            where = f" at line {line}, column {column}"
        super().__init__(message + where)
        self.path = list(path or [])
        self.line = line
        self.column = column


def load_schema():
    text = resources.files("bohmstat").joinpath("data/scenario.schema.json").read_text()
    return json.loads(text)


_VALIDATOR = None


def _validator():
    global _VALIDATOR
    if _VALIDATOR is None:
        schema = load_schema()
        cls = jsonschema.validators.validator_for(schema)
        _VALIDATOR = cls(schema)
    return _VALIDATOR


def _complex(value):
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    return complex(value)


def _pair(z):
    z = complex(z)
    return [z.real, z.imag]


_CONSTANT_DEFAULTS = {"hbar": 1.0, "mass": 1.0, "omega": 1.0, "mu": 0.0, "b": 0.0,
                      "B0": 0.0, "B1": 0.0, "omega_drive": 0.0, "field_unit": "atomic"}
_SAMPLER_DEFAULTS = {"seed": 0, "method": None, "stratify": None, "support": None}
_INTEGRATOR_DEFAULTS = {"rel_tol": 1e-9, "abs_tol": 1e-11, "dt_init": 1e-3, "dt_min": 1e-8,
                        "dt_max": 0.5, "max_steps": 2_000_000}
_PROBE_DEFAULTS = {"moments": True, "lyapunov": None, "convergence": None,
                   "momentum_variance": None}


def _as_float(obj):
    """Recursively turn ints into floats except where integers are required."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, float)):
        return float(obj)
    if isinstance(obj, list):
        return [_as_float(v) for v in obj]
    return {k: _as_float(v) for k, v in obj.items()}


def _normalize_state(state):
    out = {"kind": state["kind"]}
    consts = dict(_CONSTANT_DEFAULTS)
    consts.update(state.get("constants", {}))
    if state["kind"] in ("SPINOR_WEAKFIELD", "SPINOR_RAMSEY") and "omega" not in state.get("constants", {}):
        consts["omega"] = 0.0
    out["constants"] = {k: (v if k == "field_unit" else float(v)) for k, v in consts.items()}
    kind = state["kind"]
    if kind == "HO_SUPERPOSITION":
        out["quantum_numbers"] = [int(n) for n in state["quantum_numbers"]]
        out["coefficients"] = [_pair(_complex(c)) for c in state["coefficients"]]
    elif kind in ("GAUSSIAN_PACKET", "PACKET_SUPERPOSITION"):
        out.update({k: float(state[k]) for k in ("x_c", "p0", "gamma2")})
    elif kind == "HO_3D_DEGENERATE":
        out["terms"] = [{"n": [int(v) for v in t["n"]], "coefficient": _pair(_complex(t["coefficient"]))}
                        for t in state["terms"]]
    elif kind == "SPINOR_WEAKFIELD":
        out.update({k: float(state[k]) for k in ("spin_up", "spin_down", "gamma2")})
        out["p0"] = [float(v) for v in state.get("p0", [0.0, 0.0, 0.0])]
    elif kind == "SPINOR_RAMSEY":
        out["spinor"] = [_pair(_complex(c)) for c in state["spinor"]]
        out["gamma2"] = float(state["gamma2"])
        out["p0"] = [float(v) for v in state.get("p0", [0.0, 0.0, 0.0])]
    return out


def build_constants(consts):
    """PhysicalConstants from the normalized mapping, converting tesla fields."""
    scale = 1.0 / TESLA_PER_ATOMIC_UNIT if consts["field_unit"] == "tesla" else 1.0
    return PhysicalConstants(
        hbar=consts["hbar"], mass=consts["mass"], omega=consts["omega"], mu=consts["mu"],
        b=consts["b"], B0=consts["B0"] * scale, B1=consts["B1"] * scale,
        omega_drive=consts["omega_drive"])


def build_state(state):
    """Catalog state from a normalized state mapping."""
    k = build_constants(state["constants"])
    kind = state["kind"]
    if kind == "HO_SUPERPOSITION":
        return HOSuperposition(tuple(state["quantum_numbers"]),
                               tuple(_complex(c) for c in state["coefficients"]), k)
    if kind == "GAUSSIAN_PACKET":
        return GaussianPacket(state["x_c"], state["p0"], state["gamma2"], k)
    if kind == "PACKET_SUPERPOSITION":
        return PacketSuperposition(state["x_c"], state["p0"], state["gamma2"], k)
    if kind == "HO_3D_DEGENERATE":
        return HO3DDegenerate(tuple(tuple(t["n"]) for t in state["terms"]),
                              tuple(_complex(t["coefficient"]) for t in state["terms"]), k)
    if kind == "SPINOR_WEAKFIELD":
        return SpinorWeakField(state["spin_up"], state["spin_down"], state["gamma2"],
                               tuple(state["p0"]), k)
    if kind == "SPINOR_RAMSEY":
        return SpinorRamsey(tuple(_complex(c) for c in state["spinor"]), state["gamma2"],
                            tuple(state["p0"]), k)
    raise ScenarioError(f"unknown state kind {kind!r}", path=["state", "kind"])


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario in normalized form (all defaults filled in)."""

    name: str
    description: str
    units: dict
    state: dict
    sampler: dict
    integrator: dict
    times: dict
    currents: tuple
    probes: dict
    output: dict = field(default_factory=lambda: {"directory": None})

    def to_dict(self):
        return {
            "name": self.name, "description": self.description, "units": copy.deepcopy(self.units),
            "state": copy.deepcopy(self.state), "sampler": copy.deepcopy(self.sampler),
            "integrator": dict(self.integrator), "times": copy.deepcopy(self.times),
            "currents": list(self.currents), "probes": copy.deepcopy(self.probes),
            "output": dict(self.output),
        }

    def digest(self):
        """sha256 of the canonical JSON form; equal digests mean equal runs."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def grid(self):
        if "values" in self.times:
            return np.array(self.times["values"], dtype=float)
        return np.linspace(0.0, self.times["stop"], self.times["count"])

    def build_state(self):
        return build_state(self.state)

    def sampler_config(self):
        s = self.sampler
        support = None
        if s["support"] is not None:
            support = (s["support"]["lo"], s["support"]["hi"])
        return SamplerConfig(n=s["n"], seed=s["seed"], method=s["method"],
                             stratify=s["stratify"], support=support)

    def integrator_config(self, current=None):
        return IntegratorConfig(times=tuple(self.grid()), current=current, **self.integrator)

    def with_overrides(self, seed=None, n=None, current=None):
        """Copy with command-line overrides applied and re-validated."""
        data = self.to_dict()
        if seed is not None:
            data["sampler"]["seed"] = int(seed)
        if n is not None:
            data["sampler"]["n"] = int(n)
        if current is not None:
            data["currents"] = [CurrentKind(current).value]
        return from_dict(data)


def serialize(cfg):
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"


def parse_scenario(text):
    """Parse and validate scenario JSON text into a :class:`ScenarioConfig`."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"syntax error: {exc.msg}", line=exc.lineno, column=exc.colno) from None
    return from_dict(data)


def _schema_errors(data):
    errors = sorted(_validator().iter_errors(data), key=lambda e: list(e.absolute_path))
    return errors


def from_dict(data):
    """Validate a decoded document and build the normalized config."""
    errors = _schema_errors(data)
    if errors:
        missing = [e for e in errors if e.validator == "required"]
        first = missing[0] if missing else errors[0]
        detail = "; ".join(
            f"{'/'.join(str(p) for p in e.absolute_path) or '<root>'}: {e.message}" for e in errors[:10])
        raise ScenarioError(f"schema violation: {detail}", path=list(first.absolute_path))
    sampler = dict(_SAMPLER_DEFAULTS)
    sampler.update(data["sampler"])
    integrator = dict(_INTEGRATOR_DEFAULTS)
    integrator.update(data.get("integrator", {}))
    integrator = {k: (int(v) if k == "max_steps" else float(v)) for k, v in integrator.items()}
    probes = dict(_PROBE_DEFAULTS)
    probes.update(data.get("probes", {}))
    times = data["times"]
    times = ({"values": [float(v) for v in times["values"]]} if "values" in times
             else {"stop": float(times["stop"]), "count": int(times["count"])})
    if sampler["stratify"] is not None and sampler["stratify"] != "sign_x":
        sampler["stratify"] = [float(v) for v in sampler["stratify"]]
    if sampler["support"] is not None:
        sampler["support"] = {k: [float(v) for v in sampler["support"][k]] for k in ("lo", "hi")}
    for key in ("lyapunov", "convergence", "momentum_variance"):
        if probes[key] is not None:
            probes[key] = _normalize_probe(key, probes[key])
    state = _normalize_state(data["state"])
    cfg = ScenarioConfig(
        name=data["name"], description=data.get("description", ""),
        units=dict(data.get("units", {})), state=state, sampler=sampler,
        integrator=integrator, times=times, currents=tuple(data.get("currents", ())),
        probes=probes, output={"directory": data.get("output", {}).get("directory")})
    return _check(cfg)


def _normalize_probe(key, probe):
    if key == "lyapunov":
        out = {"delta0": float(probe["delta0"]), "T": float(probe["T"]),
               "interval": float(probe["interval"]), "starts": int(probe.get("starts", 1)),
               "seed": int(probe.get("seed", 0))}
    elif key == "convergence":
        out = {"n_values": [int(v) for v in probe["n_values"]],
               "seeds": [int(v) for v in probe["seeds"]], "t_probe": float(probe["t_probe"])}
    else:
        out = {"times": [float(v) for v in probe["times"]]}
    return out


def _check(cfg):
    """Cross-field constraints, reported with the offending field path."""
    try:
        spec = cfg.build_state()
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"invalid state: {exc}", path=["state"]) from None
    if not cfg.currents:
        cfg = _replace_currents(cfg, (default_current(spec).value,))
    for i, current in enumerate(cfg.currents):
        kind = CurrentKind(current)
        if spec.is_spinor == (kind is CurrentKind.SPINLESS):
            raise ScenarioError(f"current {current!r} does not apply to {spec.kind}",
                                path=["currents", i])
    try:
        sampler = cfg.sampler_config()
    except ValueError as exc:
        raise ScenarioError(f"invalid sampler: {exc}", path=["sampler"]) from None
    if sampler.support is not None and len(sampler.support[0]) != spec.dim:
        raise ScenarioError("support dimension does not match the state", path=["sampler", "support"])
    if sampler.stratify == "sign_x" and spec.dim != 3:
        raise ScenarioError("sign_x stratification needs a 3D state", path=["sampler", "stratify"])
    if isinstance(sampler.stratify, tuple) and spec.dim != 1:
        raise ScenarioError("boundary stratification needs a 1D state", path=["sampler", "stratify"])
    if sampler.method == "inverse_cdf_1d" and spec.dim != 1:
        raise ScenarioError("inverse_cdf_1d needs a 1D state", path=["sampler", "method"])
    try:
        integ = cfg.integrator_config()
    except ValueError as exc:
        raise ScenarioError(f"invalid integrator or time grid: {exc}", path=["integrator"]) from None
    grid = set(integ.times)
    mv = cfg.probes["momentum_variance"]
    if mv is not None:
        for i, t in enumerate(mv["times"]):
            if t not in grid:
                raise ScenarioError(f"time {t} is not on the output grid",
                                    path=["probes", "momentum_variance", "times", i])
    conv = cfg.probes["convergence"]
    if conv is not None:
        ns = sorted(conv["n_values"])
        if ns[-1] / ns[0] < 100:
            raise ScenarioError("N values must span at least two decades",
                                path=["probes", "convergence", "n_values"])
    return cfg


def _replace_currents(cfg, currents):
    data = cfg.__dict__.copy()
    data["currents"] = tuple(currents)
    return ScenarioConfig(**data)


# ---------------------------------------------------------------------------
# Presets

_OSC_UNITS = {"system": "oscillator", "time": "1/omega", "length": "(hbar/(M omega))^(1/2)"}
_FREE_UNITS = {"system": "natural", "time": "M/hbar (hbar = M = 1)", "length": "(hbar = M = 1)"}
_ATOMIC_UNITS = {"system": "atomic", "time": "hbar/E_h", "length": "a_0"}


def _ho_equal(nmax):
    c = 1.0 / math.sqrt(nmax + 1)
    return {"kind": "HO_SUPERPOSITION", "quantum_numbers": list(range(nmax + 1)),
            "coefficients": [c] * (nmax + 1)}


def _nodal_state():
    s = 1.0 / math.sqrt(3.0)
    terms = [((1, 1, 1), 0.0), ((3, 0, 0), math.pi / 3), ((1, 2, 0), math.pi / 7)]
    return {"kind": "HO_3D_DEGENERATE",
            "terms": [{"n": list(n), "coefficient": [s * math.cos(ph), s * math.sin(ph)]}
                      for n, ph in terms]}


def _preset_dicts():
    fig5_state = {"kind": "SPINOR_WEAKFIELD", "spin_up": 0.0, "spin_down": 1.0, "gamma2": 100.0,
                  "p0": [0.0, 0.08, 0.0],
                  "constants": {"omega": 0.0, "mu": -0.001, "b": 0.1}}
    nodal_lyap = {"delta0": 1e-7, "T": 200.0, "interval": 1.0, "starts": 8, "seed": 11}
    presets = [
        ("fig1a", "1D oscillator, equal superposition of n = 0, 1 (400 trajectories)",
         {"state": _ho_equal(1), "sampler": {"n": 400}, "times": {"stop": 20.0, "count": 201},
          "units": _OSC_UNITS}),
        ("fig1c", "1D oscillator, equal superposition of n = 0, 1, 2 (400 trajectories)",
         {"state": _ho_equal(2), "sampler": {"n": 400}, "times": {"stop": 20.0, "count": 201},
          "units": _OSC_UNITS}),
        ("fig2", "Coherent packet x_c = 1, gamma^2 = 0.5 in the oscillator (400 trajectories)",
         {"state": {"kind": "GAUSSIAN_PACKET", "x_c": 1.0, "p0": 0.0, "gamma2": 0.5},
          "sampler": {"n": 400}, "times": {"stop": 20.0, "count": 201}, "units": _OSC_UNITS,
          "probes": {"momentum_variance": {"times": [0.0, 5.0, 10.0]}}}),
        ("fig3", "Free packet x_c = 0, gamma^2 = 0.5, hbar = M = 1 (400 trajectories)",
         {"state": {"kind": "GAUSSIAN_PACKET", "x_c": 0.0, "p0": 0.0, "gamma2": 0.5,
                    "constants": {"omega": 0.0}},
          "sampler": {"n": 400}, "times": {"stop": 10.0, "count": 101}, "units": _FREE_UNITS,
          "probes": {"momentum_variance": {"times": [0.0, 5.0, 10.0]}}}),
        ("fig4", "3D degenerate oscillator superposition with a nodal plane (250 trajectories)",
         {"state": _nodal_state(), "sampler": {"n": 250}, "times": {"stop": 50.0, "count": 101},
          "units": _OSC_UNITS, "probes": {"lyapunov": nodal_lyap}}),
        ("fig5", "Spin-1/2 packet in the weak gradient field, spin -z, both currents (400 trajectories)",
         {"state": fig5_state, "sampler": {"n": 400}, "times": {"stop": 100.0, "count": 101},
          "units": _ATOMIC_UNITS, "currents": ["conv", "pauli"]}),
        ("figA1a", "Oscillator packet x_c = 1, gamma^2 = 1/1.6 (400 trajectories)",
         {"state": {"kind": "GAUSSIAN_PACKET", "x_c": 1.0, "p0": 0.0, "gamma2": 1 / 1.6},
          "sampler": {"n": 400}, "times": {"stop": 20.0, "count": 201}, "units": _OSC_UNITS}),
        ("figA1c", "Oscillator packet x_c = 1, gamma^2 = 1/2.4 (400 trajectories)",
         {"state": {"kind": "GAUSSIAN_PACKET", "x_c": 1.0, "p0": 0.0, "gamma2": 1 / 2.4},
          "sampler": {"n": 400}, "times": {"stop": 20.0, "count": 201}, "units": _OSC_UNITS}),
        ("figA2", "Free superposition of packets at +-1, gamma^2 = 0.5 (400 trajectories)",
         {"state": {"kind": "PACKET_SUPERPOSITION", "x_c": 1.0, "p0": 1.0, "gamma2": 0.5,
                    "constants": {"omega": 0.0}},
          "sampler": {"n": 400}, "times": {"stop": 10.0, "count": 101}, "units": _FREE_UNITS}),
        ("figA3", "Oscillator superposition of packets at +-1, gamma^2 = 0.5 (400 trajectories)",
         {"state": {"kind": "PACKET_SUPERPOSITION", "x_c": 1.0, "p0": 1.0, "gamma2": 0.5},
          "sampler": {"n": 400}, "times": {"stop": 20.0, "count": 201}, "units": _OSC_UNITS}),
        ("figA4", "3D nodal superposition, all axes reported (250 trajectories)",
         {"state": _nodal_state(), "sampler": {"n": 250}, "times": {"stop": 50.0, "count": 101},
          "units": _OSC_UNITS}),
        ("figA5", "Spin-1/2 weak-field packet, remaining axes and widths (400 trajectories)",
         {"state": fig5_state, "sampler": {"n": 400}, "times": {"stop": 100.0, "count": 101},
          "units": _ATOMIC_UNITS, "currents": ["conv", "pauli"]}),
        ("figA6", "Spin-1/2 packet in a rotating field, B0 = 1 T, B1 = 0.001 T (150 trajectories)",
         {"state": {"kind": "SPINOR_RAMSEY", "spinor": [1.0, 0.0], "gamma2": 0.5,
                    "p0": [0.0, 0.08, 0.0],
                    "constants": {"omega": 0.0, "mu": -0.001, "B0": 1.0, "B1": 0.001,
                                  "omega_drive": 7.06e-10, "field_unit": "tesla"}},
          "sampler": {"n": 150}, "times": {"stop": 20.0, "count": 201}, "units": _ATOMIC_UNITS,
          "currents": ["conv", "pauli"]}),
    ]
    out = {}
    for name, description, body in presets:
        doc = {"name": name, "description": description}
        doc.update(copy.deepcopy(body))
        out[name] = doc
    return out


PRESETS = _preset_dicts()


def list_presets():
    """(name, description) for every built-in scenario."""
    return [(name, doc["description"]) for name, doc in PRESETS.items()]


def load_preset(name):
    try:
        return from_dict(copy.deepcopy(PRESETS[name]))
    except KeyError:
        raise ScenarioError(f"unknown preset {name!r}") from None


def load(source):
    """A preset name or a path to a scenario file."""
    if source in PRESETS:
        return load_preset(source)
    try:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {source!r}: {exc.strerror}") from None
    return parse_scenario(text)


# ---------------------------------------------------------------------------
# Running

_AXES = "xyz"


def fmt(value):
    """17 significant digits, locale independent."""
    return format(float(value), ".17g")


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt(v) if isinstance(v, float) else v
                         for v in row])
    return buf.getvalue()


def moments_table(result):
    """Header and rows of the moments CSV for an :class:`EnsembleResult`."""
    d = result.sample_mean.shape[1]
    axes = _AXES[:d] if d > 1 else "x"
    header = ["t"]
    for name in ("sample_mean", "sample_std", "born_mean", "born_std", "stderr"):
        header += [f"{name}_{a}" for a in axes]
    header.append("n_ok")
    rows = []
    for i, t in enumerate(result.times):
        row = [float(t)]
        for arr in (result.sample_mean, result.sample_std, result.born_mean, result.born_std,
                    result.stderr):
            row += [float(v) for v in arr[i]]
        row.append(result.n_ok)
        rows.append(row)
    return header, rows


def _lyapunov_probe(spec, cfg, probe, integ):
    starts = sample_initial(spec, SamplerConfig(n=probe["starts"], seed=probe["seed"]))
    header = ["start"] + [f"x0_{a}" for a in _AXES[:spec.dim]] + ["lambda", "segments", "shortened"]
    rows, lams = [], []
    for i, x0 in enumerate(starts):
        est = lyapunov(spec, x0, probe["delta0"], probe["T"], probe["interval"], integ)
        lams.append(est.lam)
        rows.append([i] + [float(v) for v in x0] + [est.lam, int(est.log_stretch.size),
                                                   int(est.shortened)])
    lams = np.array(lams)
    summary = {"mean": float(lams.mean()),
               "stderr": float(lams.std(ddof=1) / math.sqrt(lams.size)) if lams.size > 1 else None,
               "values": [float(v) for v in lams], "delta0": probe["delta0"], "T": probe["T"],
               "interval": probe["interval"]}
    return _csv_text(header, rows), summary


def _convergence_probe(spec, cfg, probe, integ):
    table = convergence_sweep(spec, probe["n_values"], probe["seeds"], integ, probe["t_probe"],
                              sampler=cfg.sampler_config())
    header = ["n", "mean_abs_deviation"] + [f"seed_{s}" for s in probe["seeds"]]
    rows = [[int(n), float(dev)] + [float(v) for v in per]
            for n, dev, per in zip(table.n_values, table.deviation, table.per_seed)]
    return _csv_text(header, rows), {"slope": table.slope, "intercept": table.intercept}


def run_scenario(cfg, out_dir=None):
    """Execute the pipeline and write outputs atomically into ``out_dir``.

    Files are staged in a temporary directory next to the destination and
    moved into place only after every step succeeded. Returns the output
    directory path.
    """
    out_dir = out_dir or cfg.output["directory"] or os.path.join(
        os.environ.get(DEFAULT_OUT_ENV, "runs"), cfg.name)
    out_dir = os.path.abspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    staging = tempfile.mkdtemp(prefix=".staging-", dir=out_dir)
    started = time.perf_counter()
    try:
        files, meta = _run(cfg)
        meta["wall_time_s"] = time.perf_counter() - started
        files["metadata.json"] = json.dumps(meta, indent=2, sort_keys=True) + "\n"
        for name, text in files.items():
            with open(os.path.join(staging, name), "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for name in files:
            os.replace(os.path.join(staging, name), os.path.join(out_dir, name))
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return out_dir


def _run(cfg):
    spec = cfg.build_state()
    sampler = cfg.sampler_config()
    x0 = sample_initial(spec, sampler)
    files = {}
    meta = {
        "scenario": cfg.name, "description": cfg.description, "config_digest": cfg.digest(),
        "seed": sampler.seed, "n": sampler.n, "rng": RNG_NAME, "units": cfg.units,
        "state_kind": spec.kind, "currents": list(cfg.currents),
        "versions": {"bohmstat": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "runs": {},
    }
    born = None
    for i, current in enumerate(cfg.currents):
        integ = cfg.integrator_config(current)
        batch = propagate_ensemble(spec, x0, integ)
        result = ensemble_moments(batch, spec, seed=sampler.seed, born=born)
        born = (result.born_mean, result.born_std)
        name = "moments.csv" if i == 0 else f"moments_{current}.csv"
        if cfg.probes["moments"]:
            files[name] = _csv_text(*moments_table(result))
        zm, zs = result.max_abs_z()
        meta["runs"][current] = {
            "moments_file": name if cfg.probes["moments"] else None,
            "integrator_digest": integ.digest(), "n_ok": result.n_ok,
            "abort_fraction": result.abort_fraction, "status_counts": batch.status_counts(),
            "max_abs_z_mean": zm, "max_abs_z_std": zs,
        }
        mv = cfg.probes["momentum_variance"]
        if mv is not None:
            rows = []
            for t in mv["times"]:
                var = classical_momentum_variance(batch, spec, t)
                rows.append([t] + [float(v) for v in var.variance] + [var.n_used, var.n_skipped])
            header = ["t"] + [f"var_p_{a}" for a in _AXES[:spec.dim]] + ["n_used", "n_skipped"]
            suffix = "" if i == 0 else f"_{current}"
            files[f"momentum_variance{suffix}.csv"] = _csv_text(header, rows)
    meta["abort_fraction"] = max(r["abort_fraction"] for r in meta["runs"].values())
    integ = cfg.integrator_config(cfg.currents[0])
    if cfg.probes["lyapunov"] is not None:
        files["lyapunov.csv"], meta["lyapunov"] = _lyapunov_probe(
            spec, cfg, cfg.probes["lyapunov"], integ)
    if cfg.probes["convergence"] is not None:
        files["convergence.csv"], meta["convergence"] = _convergence_probe(
            spec, cfg, cfg.probes["convergence"], integ)
    return files, meta
