"""Scenario configuration files (TOML).

A scenario names exactly one model section, an inverse temperature, the
outputs to produce, and optionally a time grid, a coupling schedule preset,
a sweep, and tolerance overrides. Inline matrices are row-major nested
arrays whose entries are either real numbers or ``[re, im]`` pairs.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .thermo import MIN_BETA

MODEL_KINDS = ("qubit-boson", "qubit-fermion", "generic-matrices")
OUTPUTS = ("distribution", "moments", "jarzynski", "bounds", "decoherence",
           "strong-coupling", "cyclic", "all")
SCHEDULE_PRESETS = ("constant", "linear-ramp", "quench-off")
MAX_MOMENT_ORDER = 6

DEFAULT_TOLERANCES = {
    "normalization": 1e-10,
    "jarzynski": 1e-9,
    "bounds": 1e-9,
    "oracle": 1e-9,
    "energy": 1e-10,
    "effective_hamiltonian": 1e-9,
    "internal_energy": 1e-6,
    "cyclic": 1e-9,
    "cyclic_bookkeeping": 1e-10,
    "static_limit": 1e-7,
    "audit": 1e-6,
    "closed_form": 1e-10,
}


class ConfigError(ValueError):
    """Invalid scenario configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


@dataclass
class Scenario:
    raw: dict
    beta: float
    model: dict
    outputs: tuple
    moment_order: int = 2
    time_total: float | None = None
    time_steps: int | None = None
    schedule: dict | None = None
    sweep: dict | None = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    @property
    def digest(self) -> str:
        return scenario_hash(self.raw)

    def wants(self, name: str) -> bool:
        return "all" in self.outputs or name in self.outputs

    def times(self) -> list[float]:
        if self.time_total is None:
            return []
        n = self.time_steps or 1
        return [self.time_total * j / n for j in range(n + 1)]


def scenario_hash(raw: dict) -> str:
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def load_toml(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("", f"cannot read config {path}: {exc.strerror}") from exc
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("", f"{path}: {exc}") from exc


def _number(raw: dict, key: str, where: str, default=None, positive=False, integer=False):
    val = raw.get(key, default)
    name = f"{where}.{key}" if where else key
    if val is None:
        raise ConfigError(name, "missing required value")
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(name, f"expected a number, got {val!r}")
    if integer and not isinstance(val, int):
        raise ConfigError(name, f"expected an integer, got {val!r}")
    if not math.isfinite(val):
        raise ConfigError(name, "must be finite")
    if positive and val <= 0:
        raise ConfigError(name, f"must be positive, got {val!r}")
    return val


def _number_list(raw: dict, key: str, where: str, positive=False) -> list:
    val = raw.get(key)
    name = f"{where}.{key}"
    if not isinstance(val, list) or not val:
        raise ConfigError(name, "expected a non-empty array of numbers")
    return [_number({name: v}, name, "", positive=positive) for v in val]


def parse_matrix(val, name: str) -> np.ndarray:
    """Row-major nested array of reals or ``[re, im]`` pairs -> complex matrix."""
    if not isinstance(val, list) or not val or not all(isinstance(r, list) for r in val):
        raise ConfigError(name, "expected a square matrix as an array of rows")
    n = len(val)
    out = np.zeros((n, n), dtype=complex)
    for i, row in enumerate(val):
        if len(row) != n:
            raise ConfigError(name, f"row {i} has {len(row)} entries, expected {n}")
        for j, x in enumerate(row):
            if isinstance(x, list):
                if len(x) != 2 or not all(isinstance(c, (int, float)) and not isinstance(c, bool)
                                          for c in x):
                    raise ConfigError(f"{name}[{i}][{j}]", "expected [re, im]")
                out[i, j] = complex(x[0], x[1])
            elif isinstance(x, (int, float)) and not isinstance(x, bool):
                out[i, j] = x
            else:
                raise ConfigError(f"{name}[{i}][{j}]", f"bad matrix entry {x!r}")
    if not np.all(np.isfinite(out)):
        raise ConfigError(name, "matrix entries must be finite")
    return out


def _validate_model(m: Any) -> dict:
    if not isinstance(m, dict):
        raise ConfigError("model", "missing [model] section")
    kind = m.get("kind")
    if kind not in MODEL_KINDS:
        raise ConfigError("model.kind", f"must be one of {', '.join(MODEL_KINDS)}; got {kind!r}")
    if kind in ("qubit-boson", "qubit-fermion"):
        _number(m, "omega", "model")
    if kind == "qubit-fermion":
        sites = _number(m, "sites", "model", integer=True)
        if sites < 2:
            raise ConfigError("model.sites", "need at least 2 sites")
        _number(m, "hopping", "model", default=1.0)
        _number(m, "chemical_potential", "model", default=0.0)
        given = [k for k in ("coupling", "site_couplings", "total_coupling") if k in m]
        if len(given) != 1:
            raise ConfigError("model.coupling",
                              "give exactly one of coupling, site_couplings, total_coupling")
        if "site_couplings" in m:
            if len(_number_list(m, "site_couplings", "model")) != sites:
                raise ConfigError("model.site_couplings", f"need {sites} values")
        else:
            _number(m, given[0], "model")
        if m.get("boundary", "periodic") not in ("periodic", "open"):
            raise ConfigError("model.boundary", "must be 'periodic' or 'open'")
    elif kind == "qubit-boson":
        w = _number_list(m, "frequencies", "model", positive=True)
        g = _number_list(m, "couplings", "model")
        if len(w) != len(g):
            raise ConfigError("model.couplings", "need one coupling per frequency")
        cutoff = _number(m, "fock_cutoff", "model", integer=True)
        if cutoff < 1:
            raise ConfigError("model.fock_cutoff", "must be >= 1")
    else:
        eps = _number_list(m, "system_energies", "model")
        parse_matrix(m.get("env_hamiltonian"), "model.env_hamiltonian")
        cs = m.get("couplings")
        if not isinstance(cs, list) or len(cs) != len(eps):
            raise ConfigError("model.couplings", f"need {len(eps)} coupling matrices")
        for n, c in enumerate(cs):
            parse_matrix(c, f"model.couplings[{n}]")
    return m


def validate(raw: dict) -> Scenario:
    """Check a parsed config and return a :class:`Scenario`; raises :class:`ConfigError`."""
    known = {"beta", "outputs", "moment_order", "model", "time", "schedule", "sweep", "tolerances"}
    for key in raw:
        if key not in known:
            raise ConfigError(key, "unknown top-level key")
    beta = _number(raw, "beta", "")
    if beta < MIN_BETA:
        raise ConfigError("beta", f"must be >= {MIN_BETA:g}, got {beta!r}")
    model = _validate_model(raw.get("model"))

    outputs = raw.get("outputs", ["all"])
    if isinstance(outputs, str):
        outputs = [outputs]
    if not isinstance(outputs, list) or not outputs:
        raise ConfigError("outputs", "expected a non-empty array")
    for o in outputs:
        if o not in OUTPUTS:
            raise ConfigError("outputs", f"unknown output {o!r}")
    order = _number(raw, "moment_order", "", default=2, integer=True)
    if not 1 <= order <= MAX_MOMENT_ORDER:
        raise ConfigError("moment_order", f"must be between 1 and {MAX_MOMENT_ORDER}")

    sc = Scenario(raw=raw, beta=float(beta), model=model, outputs=tuple(outputs),
                  moment_order=order)

    if "time" in raw:
        t = raw["time"]
        if not isinstance(t, dict):
            raise ConfigError("time", "expected a table")
        sc.time_total = float(_number(t, "total", "time"))
        if sc.time_total < 0:
            raise ConfigError("time.total", "must be non-negative")
        sc.time_steps = int(_number(t, "steps", "time", default=1, integer=True))
        if sc.time_steps < 1:
            raise ConfigError("time.steps", "must be >= 1")

    if "schedule" in raw:
        s = raw["schedule"]
        if not isinstance(s, dict) or s.get("preset") not in SCHEDULE_PRESETS:
            raise ConfigError("schedule.preset", f"must be one of {', '.join(SCHEDULE_PRESETS)}")
        if sc.time_total is None or sc.time_total <= 0:
            raise ConfigError("time.total", "a schedule needs a positive time.total")
        if s["preset"] == "quench-off":
            _number(s, "t_off", "schedule")
        steps = _number(s, "product_steps", "schedule", default=1024, integer=True)
        if steps < 1:
            raise ConfigError("schedule.product_steps", "must be >= 1")
        sc.schedule = s

    if "sweep" in raw:
        s = raw["sweep"]
        if not isinstance(s, dict) or not isinstance(s.get("parameter"), str):
            raise ConfigError("sweep.parameter", "expected a dotted parameter path")
        if not isinstance(s.get("values"), list) or not s["values"]:
            raise ConfigError("sweep.values", "expected a non-empty array")
        sc.sweep = s

    if "tolerances" in raw:
        tol = raw["tolerances"]
        if not isinstance(tol, dict):
            raise ConfigError("tolerances", "expected a table")
        for k in tol:
            if k not in DEFAULT_TOLERANCES:
                raise ConfigError(f"tolerances.{k}", "unknown tolerance")
            sc.tolerances[k] = float(_number(tol, k, "tolerances", positive=True))
    return sc


def set_path(raw: dict, path: str, value) -> dict:
    """Copy of ``raw`` with the dotted ``path`` set to ``value``."""
    out = copy.deepcopy(raw)
    node = out
    keys = path.split(".")
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            raise ConfigError(f"sweep.parameter", f"path {path!r} does not exist")
        node = node[k]
    node[keys[-1]] = value
    return out


def sweep_points(sc: Scenario) -> list[dict]:
    """One raw config per sweep value, with the sweep section removed."""
    base = {k: v for k, v in sc.raw.items() if k != "sweep"}
    return [set_path(base, sc.sweep["parameter"], v) for v in sc.sweep["values"]]
