"""Command-line front end.

Subcommands
-----------
validate     check the model assumptions in a config and print a report
solve        solve the penalized problem: policy CSV plus summary
constrained  solve the drop-budget problem by dualization
sweep        emit (p, gamma, beta, gap) rows over a penalty grid
simulate     Monte Carlo validation of the analytic solution

Config schema (YAML)::

    model:
      domain:                 # list of [lo, hi] intervals and scalars;
        - [0.0, .inf]         # the last interval may be unbounded
      cost:                   # one descriptor per domain piece
        - kind: exponential   # linear | power | exponential | table | point
          alpha: 1.0          # shift defaults to the piece lower end
    params:
      sigma2: 1.0             # required, no default
      b: 1.0                  # required, no default
      p: 2.0                  # exactly one of p / beta_hat
    sim:                      # required by `simulate` only
      dt: 1.0e-3
      horizon: 1.0e4
      n_reps: 64
      seed: 7                 # default 0
      burn_in: 0.1            # optional
      z0: 0.5                 # optional, default b/2
    output:
      dir: out                # default "."
    solver:
      n_z: 1025               # state-grid resolution
      mc_tolerance: 0.02      # relative tolerance for `simulate`

Numbers may be quoted strings with exponent notation.  Exit codes:
0 success, 1 usage or parse error, 2 model-assumption failure,
3 numerical failure, 4 validation failure.

All CSV output uses comma separators, '.' decimal points, 17 significant
digits, LF line endings, and a mandatory header row.  The policy CSV is
preceded by one '#' comment line recording sigma2, b, p, gamma, and
residual_max.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import bellman, constrained, rejection, simulator
from .config import load_config
from .errors import (BracketingFailed, DriftCtrlError, DualityViolation,
                     EndpointMismatch, GammaOutOfRange, InfeasibleBudget,
                     ModelValidationError, NonPositiveParameter, NotInActionSet,
                     ParseError, SlackBudgetWarning, StateOutOfRange,
                     StepTooLarge, ValidationFailed)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MODEL = 2
EXIT_NUMERIC = 3
EXIT_VALIDATION = 4

_NUMERIC_ERRORS = (GammaOutOfRange, BracketingFailed, EndpointMismatch,
                   DualityViolation, InfeasibleBudget, NonPositiveParameter,
                   NotInActionSet, StateOutOfRange, StepTooLarge)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fmt(x):
    return format(float(x), ".17g")


def _write_csv(path, header, columns, meta=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if meta:
            fh.write("# " + " ".join(f"{k}={_fmt(v)}" for k, v in meta.items()) + "\n")
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_summary(path, items):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        for k, v in items.items():
            if isinstance(v, str):
                fh.write(f"{k}={v}\n")
            else:
                fh.write(f"{k}={_fmt(v)}\n")


def _parse_p_grid(spec):
    parts = spec.split(":")
    if len(parts) not in (3, 4):
        raise ParseError("--p-grid expects lo:hi:n or lo:hi:n:log")
    try:
        lo, hi = float(parts[0]), float(parts[1])
        n = int(parts[2])
    except ValueError as exc:
        raise ParseError(f"--p-grid: {exc}") from exc
    if len(parts) == 4:
        if parts[3] != "log":
            raise ParseError("--p-grid: fourth field must be 'log'")
        if lo <= 0.0:
            raise ParseError("--p-grid: log spacing needs lo > 0")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def _out_dir(args, cfg):
    return Path(args.out if args.out is not None else cfg.out_dir)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_validate(args):
    cfg = load_config(args.config)
    report = cfg.assumption_report()
    kinds = {v.kind for v in report}
    lines = []
    lines.append("normalization (zero cost at least action): "
                 + ("violated" if "NotNormalized" in kinds else "satisfied"))
    lines.append("monotone cost: "
                 + ("violated" if "NotNondecreasing" in kinds else "satisfied"))
    lines.append("positive cost above least action: "
                 + ("violated" if "NotPositive" in kinds else "satisfied"))
    if cfg.action_set.unbounded:
        if "GrowthConditionViolated" in kinds:
            lines.append("growth condition: VIOLATED (unbounded action set needs a "
                         "superlinear cost tail)")
        else:
            tail = type(cfg.cost_spec.fns[-1]).__name__
            kind = "exponential tail" if tail == "ExponentialCost" else "superlinear power tail"
            lines.append(f"growth condition: satisfied ({kind})")
    else:
        lines.append("growth condition: not applicable (bounded action set)")
    for v in report:
        lines.append(f"  detail: {v}")
    print("\n".join(lines))
    if report:
        return EXIT_MODEL
    print("model: valid")
    return EXIT_OK


def _solve_pipeline(cfg):
    model = cfg.model()
    if cfg.p is None:
        raise ParseError("this command needs params.p (got beta_hat)")
    params = bellman.ProblemParams(cfg.sigma2, cfg.b, cfg.p)
    sol = bellman.solve(model, params, n_z=cfg.n_z)
    rep = rejection.rejection_report(model, params, sol)
    return model, params, sol, rep


def _write_policy_csv(path, sol, params, meta_extra=None):
    meta = {"sigma2": params.sigma2, "b": params.b, "p": params.p,
            "gamma": sol.gamma, "residual_max": sol.residual_max}
    if meta_extra:
        meta.update(meta_extra)
    _write_csv(path, ["z", "v", "f", "theta"],
               [sol.z_grid, sol.v_grid, sol.f_grid, sol.theta_grid], meta=meta)


def _cmd_solve(args):
    cfg = load_config(args.config)
    model, params, sol, rep = _solve_pipeline(cfg)
    out = _out_dir(args, cfg)
    _write_policy_csv(out / "policy.csv", sol, params)
    summary = {
        "sigma2": params.sigma2, "b": params.b, "p": params.p,
        "gamma": sol.gamma, "beta": rep.beta, "gap": rep.gap,
        "residual_max": sol.residual_max,
        "beta_star_upper": rep.beta_star_upper,
        "beta_star_lower": rep.beta_star_lower,
        "p0": rep.p0,
    }
    _write_summary(out / "summary.txt", summary)
    for k, v in summary.items():
        print(f"{k}={_fmt(v)}")
    if sol.residual_max > bellman.EPS_RESIDUAL:
        print(f"residual gate failed: {sol.residual_max:.3g} > "
              f"{bellman.EPS_RESIDUAL:g}; increase solver.n_z", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _cmd_constrained(args):
    cfg = load_config(args.config)
    model = cfg.model()
    if cfg.beta_hat is None:
        raise ParseError("constrained needs params.beta_hat (got p)")
    system = bellman.SystemParams(cfg.sigma2, cfg.b)
    spec = constrained.ConstraintSpec(cfg.beta_hat)
    out = _out_dir(args, cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        dual = constrained.solve_dual(model, system, spec, n_z=cfg.n_z)
    for w in caught:
        if issubclass(w.category, SlackBudgetWarning):
            print(f"warning: {w.message}", file=sys.stderr)
    summary = {
        "beta_hat": dual.beta_hat, "p_star": dual.p_star, "gamma": dual.gamma,
        "energy_cost": dual.energy_cost, "beta": dual.beta,
        "slack": "true" if dual.slack else "false",
    }
    _write_summary(out / "constrained_summary.txt", summary)
    for k, v in summary.items():
        print(f"{k}={v if isinstance(v, str) else _fmt(v)}")
    if dual.slack:
        z = np.linspace(0.0, cfg.b, cfg.n_z)
        theta = np.full_like(z, model.theta_star)
        nan = np.full_like(z, math.nan)
        _write_csv(out / "policy.csv", ["z", "v", "f", "theta"],
                   [z, nan, nan, theta],
                   meta={"sigma2": cfg.sigma2, "b": cfg.b, "p": 0.0,
                         "gamma": 0.0, "residual_max": 0.0})
    else:
        _write_policy_csv(out / "policy.csv", dual.solution,
                          dual.solution.params, {"beta_hat": dual.beta_hat})
    return EXIT_OK


def _cmd_sweep(args):
    cfg = load_config(args.config)
    model = cfg.model()
    grid = _parse_p_grid(args.p_grid)
    gammas, betas, gaps = [], [], []
    for p in grid:
        params = bellman.ProblemParams(cfg.sigma2, cfg.b, float(p))
        sol = bellman.solve(model, params, n_z=cfg.n_z)
        rep = rejection.rejection_report(model, params, sol)
        gammas.append(sol.gamma)
        betas.append(rep.beta)
        gaps.append(rep.gap)
    out = _out_dir(args, cfg)
    _write_csv(out / "sweep.csv", ["p", "gamma", "beta", "gap"],
               [grid, gammas, betas, gaps])
    print(f"wrote {len(grid)} rows to {out / 'sweep.csv'}")
    return EXIT_OK


def _cmd_simulate(args):
    cfg = load_config(args.config)
    if cfg.sim is None:
        raise ParseError("simulate needs a sim block in the config")
    sim_cfg = cfg.sim
    if args.seed is not None:
        sim_cfg = simulator.SimConfig(sim_cfg.dt, sim_cfg.horizon, sim_cfg.n_reps,
                                      args.seed, sim_cfg.burn_in, sim_cfg.z0)
    model, params, sol, rep = _solve_pipeline(cfg)
    out = _out_dir(args, cfg)

    verdict = "PASS"
    try:
        vr = simulator.validate_solution(model, params, sol, rep, sim_cfg,
                                         tol_mc=cfg.mc_tolerance)
    except ValidationFailed as exc:
        verdict = "FAIL"
        print(f"validation: {exc}", file=sys.stderr)
        vr = exc.report
    res = vr.sim
    summary = {
        "avg_cost_mean": res.avg_cost_mean, "avg_cost_se": res.avg_cost_se,
        "drop_rate_mean": res.drop_rate_mean, "drop_rate_se": res.drop_rate_se,
        "loss_rate_mean": res.loss_rate_mean, "loss_rate_se": res.loss_rate_se,
        "analytic_gamma": vr.gamma, "analytic_beta": vr.beta,
        "cost_tolerance": vr.cost_tol, "drop_tolerance": vr.drop_tol,
        "dt": sim_cfg.dt, "horizon": sim_cfg.horizon,
        "n_reps": sim_cfg.n_reps, "seed": sim_cfg.seed,
        "verdict": verdict,
    }
    _write_summary(out / "sim_summary.txt", summary)
    mids = 0.5 * (res.bin_edges[1:] + res.bin_edges[:-1])
    _write_csv(out / "occupancy.csv", ["bin_lo", "bin_hi", "bin_mid", "count"],
               [res.bin_edges[:-1], res.bin_edges[1:], mids,
                res.occupancy.astype(float)])
    if args.dump_path:
        t, z, l, u, xi = simulator.dump_path(model, sol.policy, params, sim_cfg)
        _write_csv(out / "path.csv", ["t", "Z", "L", "U", "xi"], [t, z, l, u, xi])
    print(f"verdict: {verdict}")
    for k in ("avg_cost_mean", "drop_rate_mean", "analytic_gamma", "analytic_beta"):
        print(f"{k}={_fmt(summary[k])}")
    return EXIT_OK if verdict == "PASS" else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    parser = _Parser(prog="driftctrl",
                     description="Drift-rate control of a reflected buffer: "
                                 "solver, dualization, and simulation")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="path to the YAML run config")
        sp.add_argument("--out", default=None, help="output directory override")
        sp.set_defaults(fn=fn)
        return sp

    add("validate", _cmd_validate, "check model assumptions")
    add("solve", _cmd_solve, "solve the penalized control problem")
    add("constrained", _cmd_constrained, "solve the drop-budget problem")
    sp = add("sweep", _cmd_sweep, "emit gamma/beta/gap over a penalty grid")
    sp.add_argument("--p-grid", required=True,
                    help="penalty grid lo:hi:n or lo:hi:n:log")
    sp = add("simulate", _cmd_simulate, "Monte Carlo validation run")
    sp.add_argument("--dump-path", action="store_true",
                    help="also write the full sample path of one replication")
    sp.add_argument("--seed", type=int, default=None,
                    help="override the config seed")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.fn(args)
    except ParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelValidationError as exc:
        print("model assumptions violated:", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return EXIT_MODEL
    except _NUMERIC_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValidationFailed as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DriftCtrlError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
