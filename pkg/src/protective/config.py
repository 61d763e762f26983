"""Scenario configuration files.

Configs are YAML mappings. Complex matrix entries are written as explicit
``[re, im]`` pairs, row-major::

    scenario: protective
    system:
      matrix: [[[0, 0], [0, 0]],
               [[0, 0], [1, 0]]]
    observable: sigma_z          # or an inline matrix
    apparatus: {n_points: 256, dq: 0.125, mass_parameter: 1000}
    switch: {kind: ideal_constant, tau: 1000}
    pointer: {center_q: 0, width_sigma: 1}

``parse_config`` validates everything before any simulation runs and reports
all problems at once; ``dump_config`` writes the normalized form, which parses
back to an identical config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import yaml

from .errors import ConfigError, ProtectiveError
from .linalg import HermitianOperator, StateVector
from .measurement import PointerPreparation
from .scenarios import two_box_model
from .model import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    MeasurementSetup,
    SwitchProfile,
    TimeSlicing,
    build_apparatus,
    build_system,
)

NAMED_OPERATORS = {"sigma_x": SIGMA_X, "sigma_y": SIGMA_Y, "sigma_z": SIGMA_Z}
SCENARIO_NAMES = ("protective", "two_box", "tomography", "retune", "von_neumann", "sweep")
BUILDERS = ("qubit", "two_box", "random")

DEFAULTS = {
    "apparatus": {"n_points": 256, "dq": 0.125, "mass_parameter": 1000.0},
    "switch": {"kind": "ideal_constant", "tau": 1000.0, "ramp_fraction": 0.1,
               "tau_grid": [10.0, 30.0, 100.0, 300.0, 1000.0]},
    "slicing": {"n_steps": 256},
    "pointer": {"center_q": 0.0, "width_sigma": 1.0, "momentum_offset": 0.0},
    "state": {"eigenstate": 0},
    "von_neumann": {"coupling_strength": 1.0},
    "retune": {"ramp_steps": 400, "ramp_time": 50.0, "level": 0, "h_end": None},
    "tomography": {"target_index": 0},
    "two_box": {"vn_n_points": 256, "vn_dq": 0.03125, "vn_width_sigma": 0.15},
    "output": {"format": "json", "path": None},
}
TOP_KEYS = {"scenario", "system", "observable", "observables", "seed", *DEFAULTS}
BUILDER_PARAMS = {"qubit": {"splitting": 1.0}, "two_box": {"epsilon": 0.5}, "random": {"dim": 3}}


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated, defaults-filled configuration (``data`` is the normalized mapping)."""

    data: dict

    def __getitem__(self, key):
        return self.data[key]

    @property
    def scenario(self) -> str:
        return self.data["scenario"]

    @property
    def seed(self) -> int:
        return self.data["seed"]


class _Collector:
    def __init__(self):
        self.errors: list[str] = []

    def add(self, path: str, msg: str):
        self.errors.append(f"{path}: {msg}")


def _number(c: _Collector, path: str, v, *, integer=False, positive=False, allow_inf=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        c.add(path, f"expected a number, got {v!r}")
        return None
    if integer and (not isinstance(v, int)):
        c.add(path, f"expected an integer, got {v!r}")
        return None
    if math.isnan(v) or (math.isinf(v) and not allow_inf):
        c.add(path, f"must be finite, got {v!r}")
        return None
    if positive and not v > 0:
        c.add(path, f"must be positive, got {v!r}")
        return None
    return int(v) if integer else float(v)


def _matrix(c: _Collector, path: str, v, *, allow_names=True):
    """Normalize a matrix spec to either an operator name or a list of [re, im] rows."""
    if isinstance(v, str):
        if allow_names and v in NAMED_OPERATORS:
            return v
        c.add(path, f"unknown operator name {v!r}; known: {sorted(NAMED_OPERATORS)}")
        return None
    if not isinstance(v, list) or not v or not all(isinstance(r, list) for r in v):
        c.add(path, "expected a matrix: a list of rows of [re, im] pairs")
        return None
    n = len(v)
    out, ok = [], True
    for i, row in enumerate(v):
        if len(row) != n:
            c.add(f"{path}[{i}]", f"row has {len(row)} entries, matrix needs {n} (square)")
            ok = False
            continue
        new_row = []
        for j, entry in enumerate(row):
            if not (isinstance(entry, list) and len(entry) == 2):
                c.add(f"{path}[{i}][{j}]", f"expected an [re, im] pair, got {entry!r}")
                ok = False
                continue
            re = _number(c, f"{path}[{i}][{j}][0]", entry[0])
            im = _number(c, f"{path}[{i}][{j}][1]", entry[1])
            if re is None or im is None:
                ok = False
                continue
            new_row.append([re, im])
        out.append(new_row)
    return out if ok else None


def matrix_array(spec) -> np.ndarray:
    if isinstance(spec, str):
        return np.array(NAMED_OPERATORS[spec])
    return np.array([[complex(re, im) for re, im in row] for row in spec])


def _section(c: _Collector, raw: dict, name: str, schema: dict, extra=()) -> dict:
    v = raw.get(name, {})
    if v is None:
        v = {}
    if not isinstance(v, dict):
        c.add(name, f"expected a mapping, got {type(v).__name__}")
        return dict(schema)
    for k in v:
        if k not in schema and k not in extra:
            c.add(f"{name}.{k}", f"unknown key; allowed: {sorted({*schema, *extra})}")
    out = dict(schema)
    out.update({k: val for k, val in v.items() if k in schema})
    return out


def _hermitian(c: _Collector, path: str, spec, dim_expected: int | None, what: str):
    if spec is None:
        return None
    m = matrix_array(spec)
    try:
        op = HermitianOperator(m, name=what)
    except ProtectiveError as exc:
        c.add(path, str(exc))
        return None
    if dim_expected is not None and op.dim != dim_expected:
        c.add(path, f"dimension mismatch: {what} is {op.dim}x{op.dim} but the system is {dim_expected}x{dim_expected}")
        return None
    return op


def parse_config(text: str) -> ScenarioConfig:
    """Parse and fully validate a config document; raises ConfigError listing every problem."""
    try:
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown location"
        raise ConfigError([f"syntax error at {where}: {exc.problem or exc}"]) from None
    except yaml.YAMLError as exc:
        raise ConfigError([f"syntax error: {exc}"]) from None
    if not isinstance(raw, dict):
        raise ConfigError(["<root>: expected a mapping of configuration sections"])
    return _validate(raw)


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _validate(raw: dict) -> ScenarioConfig:
    c = _Collector()
    for k in raw:
        if k not in TOP_KEYS:
            c.add(str(k), f"unknown key; allowed: {sorted(TOP_KEYS)}")

    scenario = raw.get("scenario", "protective")
    if scenario not in SCENARIO_NAMES:
        c.add("scenario", f"unknown scenario {scenario!r}; choose from {list(SCENARIO_NAMES)}")

    seed = raw.get("seed", 0)
    seed = _number(c, "seed", seed, integer=True)
    if seed is not None and not 0 <= seed < 2**64:
        c.add("seed", f"must be an unsigned 64-bit integer, got {seed}")

    data: dict = {"scenario": scenario, "seed": seed}
    for name, schema in DEFAULTS.items():
        data[name] = _section(c, raw, name, schema, ("amplitudes",) if name == "state" else ())

    # system
    sys_raw = raw.get("system")
    system_spec = None
    if sys_raw is None:
        c.add("system", "missing required section")
    elif not isinstance(sys_raw, dict):
        c.add("system", "expected a mapping with 'matrix' or 'builder'")
    else:
        for k in sys_raw:
            if k not in ("matrix", "builder", "params"):
                c.add(f"system.{k}", "unknown key; allowed: ['builder', 'matrix', 'params']")
        if ("matrix" in sys_raw) == ("builder" in sys_raw):
            c.add("system", "give exactly one of 'matrix' or 'builder'")
        elif "matrix" in sys_raw:
            if "params" in sys_raw:
                c.add("system.params", "only allowed together with 'builder'")
            m = _matrix(c, "system.matrix", sys_raw["matrix"], allow_names=False)
            if m is not None:
                system_spec = {"matrix": m}
        else:
            b = sys_raw["builder"]
            if b not in BUILDERS:
                c.add("system.builder", f"unknown builder {b!r}; choose from {list(BUILDERS)}")
            else:
                params = dict(BUILDER_PARAMS[b])
                given = sys_raw.get("params") or {}
                if not isinstance(given, dict):
                    c.add("system.params", "expected a mapping")
                    given = {}
                for k, v in given.items():
                    if k not in params:
                        c.add(f"system.params.{k}", f"unknown parameter; allowed: {sorted(params)}")
                    elif k == "dim":
                        params[k] = _number(c, f"system.params.{k}", v, integer=True, positive=True)
                    else:
                        params[k] = _number(c, f"system.params.{k}", v, positive=True)
                system_spec = {"builder": b, "params": params}
    data["system"] = system_spec

    data["observable"] = None if raw.get("observable") is None else _matrix(c, "observable", raw["observable"])
    obs_list = raw.get("observables")
    if obs_list is None:
        data["observables"] = None
    elif not isinstance(obs_list, list) or not obs_list:
        c.add("observables", "expected a non-empty list of matrices or operator names")
        data["observables"] = None
    else:
        data["observables"] = [_matrix(c, f"observables[{i}]", o) for i, o in enumerate(obs_list)]

    ap = data["apparatus"]
    ap["n_points"] = _number(c, "apparatus.n_points", ap["n_points"], integer=True, positive=True)
    if ap["n_points"] is not None and (ap["n_points"] < 16 or ap["n_points"] & (ap["n_points"] - 1)):
        c.add("apparatus.n_points", f"must be a power of two >= 16, got {ap['n_points']}")
        ap["n_points"] = None
    ap["dq"] = _number(c, "apparatus.dq", ap["dq"], positive=True)
    ap["mass_parameter"] = _number(c, "apparatus.mass_parameter", ap["mass_parameter"], positive=True, allow_inf=True)

    sw = data["switch"]
    if sw["kind"] not in ("ideal_constant", "smooth_ramp"):
        c.add("switch.kind", f"must be 'ideal_constant' or 'smooth_ramp', got {sw['kind']!r}")
    sw["tau"] = _number(c, "switch.tau", sw["tau"], positive=True)
    sw["ramp_fraction"] = _number(c, "switch.ramp_fraction", sw["ramp_fraction"], positive=True)
    if not isinstance(sw["tau_grid"], list) or not sw["tau_grid"]:
        c.add("switch.tau_grid", "expected a non-empty list of durations")
        sw["tau_grid"] = None
    else:
        grid = [_number(c, f"switch.tau_grid[{i}]", t, positive=True) for i, t in enumerate(sw["tau_grid"])]
        if None not in grid and any(b <= a for a, b in zip(grid, grid[1:])):
            c.add("switch.tau_grid", "must be strictly ascending")
        sw["tau_grid"] = grid
    data["slicing"]["n_steps"] = _number(c, "slicing.n_steps", data["slicing"]["n_steps"], integer=True, positive=True)

    pt = data["pointer"]
    pt["center_q"] = _number(c, "pointer.center_q", pt["center_q"])
    pt["width_sigma"] = _number(c, "pointer.width_sigma", pt["width_sigma"], positive=True)
    pt["momentum_offset"] = _number(c, "pointer.momentum_offset", pt["momentum_offset"])

    st = data["state"]
    raw_state = raw.get("state") or {}
    if isinstance(raw_state, dict) and "amplitudes" in raw_state and "eigenstate" in raw_state:
        c.add("state", "give either 'eigenstate' or 'amplitudes', not both")
    if isinstance(raw_state, dict) and "amplitudes" in raw_state:
        amps = raw_state["amplitudes"]
        if not isinstance(amps, list) or not all(isinstance(a, list) and len(a) == 2 for a in amps):
            c.add("state.amplitudes", "expected a list of [re, im] pairs")
            st = {"amplitudes": None}
        else:
            st = {"amplitudes": [[_number(c, f"state.amplitudes[{i}][0]", a[0]),
                                  _number(c, f"state.amplitudes[{i}][1]", a[1])] for i, a in enumerate(amps)]}
    else:
        st = {"eigenstate": _number(c, "state.eigenstate", st.get("eigenstate", 0), integer=True)}
    data["state"] = st

    data["von_neumann"]["coupling_strength"] = _number(
        c, "von_neumann.coupling_strength", data["von_neumann"]["coupling_strength"], positive=True)
    rt = data["retune"]
    rt["ramp_steps"] = _number(c, "retune.ramp_steps", rt["ramp_steps"], integer=True, positive=True)
    rt["ramp_time"] = _number(c, "retune.ramp_time", rt["ramp_time"])
    if rt["ramp_time"] is not None and rt["ramp_time"] < 0:
        c.add("retune.ramp_time", "must be >= 0")
    rt["level"] = _number(c, "retune.level", rt["level"], integer=True)
    if rt["h_end"] is not None:
        rt["h_end"] = _matrix(c, "retune.h_end", rt["h_end"], allow_names=False)
    data["tomography"]["target_index"] = _number(
        c, "tomography.target_index", data["tomography"]["target_index"], integer=True)
    tb = data["two_box"]
    tb["vn_n_points"] = _number(c, "two_box.vn_n_points", tb["vn_n_points"], integer=True, positive=True)
    tb["vn_dq"] = _number(c, "two_box.vn_dq", tb["vn_dq"], positive=True)
    tb["vn_width_sigma"] = _number(c, "two_box.vn_width_sigma", tb["vn_width_sigma"], positive=True)

    out = data["output"]
    if out["format"] not in ("csv", "json"):
        c.add("output.format", f"must be 'csv' or 'json', got {out['format']!r}")
    if out["path"] is not None and not isinstance(out["path"], str):
        c.add("output.path", "expected a file path string")

    _semantic_checks(ScenarioConfig(data), c)
    if c.errors:
        raise ConfigError(c.errors)
    return ScenarioConfig(data)


def _valid(*values) -> bool:
    return all(v is not None for v in values)


def _semantic_checks(cfg: ScenarioConfig, c: _Collector) -> None:
    """Construct every domain object once so that each invariant is enforced here.

    Runs after the structural pass even when that pass found problems; checks
    whose inputs are already invalid are skipped so every error is reported once.
    """
    d = cfg.data
    builder = (d["system"] or {}).get("builder")
    system = None
    if d["system"] is not None and _valid(cfg.seed, *(d["system"].get("params") or {}).values()):
        try:
            system = build_system_from(cfg)
        except ProtectiveError as exc:
            c.add("system", str(exc))
    dim = system.dim if system is not None else None
    if cfg.scenario == "two_box" and d["system"] is not None and builder != "two_box":
        c.add("system.builder", "the two_box scenario needs builder: two_box")

    _hermitian(c, "observable", d["observable"], dim, "observable")
    for i, o in enumerate(d["observables"] or []):
        _hermitian(c, f"observables[{i}]", o, dim, f"observables[{i}]")
    observable_reported = any(e.startswith("observable") for e in c.errors)
    if cfg.scenario in ("protective", "von_neumann", "sweep") and d["observable"] is None \
            and builder != "two_box" and not observable_reported:
        c.add("observable", f"required for scenario {cfg.scenario!r}")
    if cfg.scenario == "tomography":
        if d["observables"] is None and dim != 2:
            c.add("observables", "required for tomography unless the system is a qubit")
        target = d["tomography"]["target_index"]
        if _valid(dim, target) and not 0 <= target < dim:
            c.add("tomography.target_index", f"must lie in [0, {dim})")

    apparatus = None
    ap = d["apparatus"]
    if dim is not None and ap["n_points"] is not None and dim * ap["n_points"] > 4096:
        c.add("apparatus.n_points", f"joint dimension {dim}x{ap['n_points']} exceeds the 4096 cap")
    elif _valid(*ap.values()):
        try:
            apparatus = build_apparatus(**ap)
        except ProtectiveError as exc:
            c.add("apparatus", str(exc))
    sw = d["switch"]
    if _valid(sw["tau"], sw["ramp_fraction"]) and sw["kind"] in ("ideal_constant", "smooth_ramp"):
        try:
            SwitchProfile(sw["kind"], sw["tau"], sw["ramp_fraction"])
        except ProtectiveError as exc:
            c.add("switch", str(exc))
    if cfg.scenario == "sweep" and sw["tau_grid"] is not None and len(sw["tau_grid"]) < 4:
        c.add("switch.tau_grid", f"a sweep needs at least 4 points, got {len(sw['tau_grid'])}")
    if apparatus is not None and _valid(*d["pointer"].values()):
        try:
            pointer_from(cfg).packet(apparatus)
        except ProtectiveError as exc:
            c.add("pointer", str(exc))
    st = d["state"]
    if dim is not None:
        if st.get("eigenstate") is not None and not 0 <= st["eigenstate"] < dim:
            c.add("state.eigenstate", f"must lie in [0, {dim})")
        amps = st.get("amplitudes")
        if amps is not None and len(amps) != dim:
            c.add("state.amplitudes", f"dimension mismatch: state has {len(amps)} amplitudes, system is {dim}")
    if st.get("amplitudes") is not None and all(_valid(*a) for a in st["amplitudes"]):
        if all(a == [0.0, 0.0] for a in st["amplitudes"]):
            c.add("state.amplitudes", "cannot normalize a zero vector")
    if cfg.scenario == "retune":
        rt = d["retune"]
        if rt["h_end"] is None:
            c.add("retune.h_end", "required for the retune scenario")
        else:
            op = _hermitian(c, "retune.h_end", rt["h_end"], dim, "retune.h_end")
            if op is not None:
                try:
                    build_system(op)
                except ProtectiveError as exc:
                    c.add("retune.h_end", str(exc))
        if _valid(dim, rt["level"]) and not 0 <= rt["level"] < dim:
            c.add("retune.level", f"must lie in [0, {dim})")


def build_system_from(cfg: ScenarioConfig):
    spec = cfg["system"]
    if "matrix" in spec:
        return build_system(HermitianOperator(matrix_array(spec["matrix"]), name="system.matrix"))
    params = spec["params"]
    if spec["builder"] == "qubit":
        return build_system(np.diag([0.0, params["splitting"]]))
    if spec["builder"] == "two_box":
        eps = params["epsilon"]
        return build_system(np.diag([-eps, eps]))
    rng = np.random.default_rng(cfg.seed)
    n = params["dim"]
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return build_system((a + a.conj().T) / 2)


def observable_from(cfg: ScenarioConfig, spec=None) -> HermitianOperator:
    spec = cfg["observable"] if spec is None else spec
    if spec is None and cfg["system"].get("builder") == "two_box":
        return two_box_model(cfg["system"]["params"]["epsilon"]).o_box
    return HermitianOperator(matrix_array(spec), name="observable")


def pointer_from(cfg: ScenarioConfig) -> PointerPreparation:
    return PointerPreparation(**cfg["pointer"])


def setup_from(cfg: ScenarioConfig, observable=None) -> MeasurementSetup:
    sw = cfg["switch"]
    return MeasurementSetup(
        system=build_system_from(cfg),
        apparatus=build_apparatus(**cfg["apparatus"]),
        observable=observable if observable is not None else observable_from(cfg),
        switch=SwitchProfile(sw["kind"], sw["tau"], sw["ramp_fraction"]),
        slicing=TimeSlicing(cfg["slicing"]["n_steps"]),
    )


def state_from(cfg: ScenarioConfig, system) -> StateVector:
    st = cfg["state"]
    if "amplitudes" in st:
        return StateVector.normalized([complex(re, im) for re, im in st["amplitudes"]])
    return system.eigenstate(st["eigenstate"])


def with_seed(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    """Same config with another seed, revalidated (the random builder depends on it)."""
    return _validate({**cfg.data, "seed": seed})


def dump_config(cfg: ScenarioConfig) -> str:
    """Normalized YAML text; ``parse_config(dump_config(c))`` reproduces ``c``."""
    return yaml.safe_dump(cfg.data, sort_keys=True, default_flow_style=None, width=100)


def measurement_setups(cfg: ScenarioConfig) -> list[MeasurementSetup]:
    """Every system-apparatus setup a config would propagate (empty for retune)."""
    if cfg.scenario == "retune":
        return []
    sw = cfg["switch"]
    if cfg.scenario == "tomography":
        specs = cfg["observables"] or list(NAMED_OPERATORS)
        base = setup_from(cfg, observable=observable_from(cfg, specs[0]))
        return [base.with_observable(observable_from(cfg, s)) for s in specs]
    base = setup_from(cfg)
    if cfg.scenario in ("sweep", "two_box"):
        return [base.with_tau(t) for t in sw["tau_grid"]]
    return [base]
