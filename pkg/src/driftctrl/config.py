"""Run-configuration parsing.

Configs are YAML with four blocks; the exact schema is documented in the
CLI module and README.  Numbers may be written with exponent notation as
strings ("1e-3") since YAML treats some of those as text.  There are no
implicit defaults for sigma2 and b, and exactly one of params.p and
params.beta_hat must be present.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import yaml

from .bellman import DEFAULT_NZ
from .cost_model import (ActionSet, CostSpec, ExponentialCost, LinearCost,
                         PowerCost, TableCost, check_assumptions, validate)
from .errors import ParseError
from .simulator import SimConfig


def _as_float(value, where):
    if isinstance(value, bool) or value is None:
        raise ParseError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise ParseError(f"{where}: cannot parse {value!r} as a number") from None
    raise ParseError(f"{where}: expected a number, got {type(value).__name__}")


def _as_int(value, where):
    f = _as_float(value, where)
    if f != int(f):
        raise ParseError(f"{where}: expected an integer, got {value!r}")
    return int(f)


def _need(mapping, key, where):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ParseError(f"{where}: missing required key '{key}'")
    return mapping[key]


def _parse_domain_entry(entry, where):
    if isinstance(entry, (list, tuple)):
        if len(entry) != 2:
            raise ParseError(f"{where}: interval must be [lo, hi]")
        return (_as_float(entry[0], where), _as_float(entry[1], where))
    return _as_float(entry, where)


def _parse_cost_entry(entry, piece, where):
    if not isinstance(entry, dict):
        raise ParseError(f"{where}: cost descriptor must be a mapping")
    kind = entry.get("kind")
    lo = piece if isinstance(piece, float) else piece[0]
    if kind == "linear":
        return LinearCost(_as_float(_need(entry, "slope", where), where),
                          _as_float(entry.get("intercept", 0.0), where))
    if kind == "power":
        return PowerCost(_as_float(_need(entry, "coeff", where), where),
                         _as_float(_need(entry, "exponent", where), where),
                         _as_float(entry.get("shift", lo), where))
    if kind == "exponential":
        return ExponentialCost(_as_float(_need(entry, "alpha", where), where),
                               _as_float(entry.get("shift", lo), where))
    if kind == "table":
        return TableCost([_as_float(v, where) for v in _need(entry, "x", where)],
                         [_as_float(v, where) for v in _need(entry, "c", where)])
    if kind == "point":
        return LinearCost(0.0, _as_float(_need(entry, "value", where), where))
    raise ParseError(f"{where}: unknown cost kind {kind!r}")


@dataclass
class RunConfig:
    action_set: ActionSet
    cost_spec: CostSpec
    sigma2: float
    b: float
    p: float | None
    beta_hat: float | None
    sim: SimConfig | None
    out_dir: str
    n_z: int
    mc_tolerance: float

    def model(self):
        """Validate and return the model; raises ModelValidationError."""
        return validate(self.action_set, self.cost_spec)

    def assumption_report(self):
        return check_assumptions(self.action_set, self.cost_spec)


def load_config(path):
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: top level must be a mapping")

    model_block = _need(raw, "model", path)
    domain = _need(model_block, "domain", f"{path}: model")
    cost = _need(model_block, "cost", f"{path}: model")
    if not isinstance(domain, list) or not isinstance(cost, list):
        raise ParseError(f"{path}: model.domain and model.cost must be lists")
    if len(domain) != len(cost):
        raise ParseError(
            f"{path}: model.domain has {len(domain)} pieces but model.cost "
            f"has {len(cost)} descriptors")
    pieces = [_parse_domain_entry(d, f"{path}: model.domain[{i}]")
              for i, d in enumerate(domain)]
    fns = [_parse_cost_entry(c, piece, f"{path}: model.cost[{i}]")
           for i, (c, piece) in enumerate(zip(cost, pieces))]
    try:
        action_set = ActionSet(pieces)
        cost_spec = CostSpec(fns)
    except (ValueError, TypeError) as exc:
        raise ParseError(f"{path}: model: {exc}") from exc

    params = _need(raw, "params", path)
    sigma2 = _as_float(_need(params, "sigma2", f"{path}: params"), f"{path}: params.sigma2")
    b = _as_float(_need(params, "b", f"{path}: params"), f"{path}: params.b")
    has_p = "p" in params
    has_bh = "beta_hat" in params
    if has_p == has_bh:
        raise ParseError(f"{path}: params must contain exactly one of p / beta_hat")
    p = _as_float(params["p"], f"{path}: params.p") if has_p else None
    beta_hat = _as_float(params["beta_hat"], f"{path}: params.beta_hat") if has_bh else None

    sim = None
    if "sim" in raw and raw["sim"] is not None:
        s = raw["sim"]
        where = f"{path}: sim"
        try:
            sim = SimConfig(
                dt=_as_float(_need(s, "dt", where), f"{where}.dt"),
                horizon=_as_float(_need(s, "horizon", where), f"{where}.horizon"),
                n_reps=_as_int(_need(s, "n_reps", where), f"{where}.n_reps"),
                seed=_as_int(s.get("seed", 0), f"{where}.seed"),
                burn_in=_as_float(s.get("burn_in", 0.1), f"{where}.burn_in"),
                z0=(_as_float(s["z0"], f"{where}.z0") if "z0" in s else None),
            )
        except ValueError as exc:
            raise ParseError(f"{where}: {exc}") from exc

    output = raw.get("output") or {}
    out_dir = str(output.get("dir", "."))
    solver = raw.get("solver") or {}
    n_z = _as_int(solver.get("n_z", DEFAULT_NZ), f"{path}: solver.n_z")
    if n_z < 9:
        raise ParseError(f"{path}: solver.n_z must be at least 9")
    mc_tol = _as_float(solver.get("mc_tolerance", 0.02), f"{path}: solver.mc_tolerance")

    return RunConfig(action_set, cost_spec, sigma2, b, p, beta_hat,
                     sim, out_dir, n_z, mc_tol)
