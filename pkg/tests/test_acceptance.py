"""End-to-end acceptance checks against closed-form and statistical oracles.

Each test prints one PASS line when it completes; a failure carries the
measured numbers in the assertion message.  Known limitation: the Monte
Carlo agreement check (acceptance 4) pins dt = 1e-3, where the projection
scheme's O(sqrt(dt)) boundary bias (about -4 percent on cost, -8 percent
on drop rate for this case) exceeds the 2 percent tolerance; the
dt-refinement checks in the simulator suite confirm the estimates converge
to the analytic values as dt shrinks.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from driftctrl import (ActionSet, ConstraintSpec, CostSpec, ExponentialCost,
                       LinearCost, ProblemParams, SimConfig, SystemParams,
                       compare_policies, rejection_report, simulate, solve,
                       solve_dual, validate, validate_solution)
from driftctrl.cli import main

E2 = math.e ** 2


def _report(n, text):
    print(f"[acceptance {n}] PASS: {text}")


# --------------------------------------------------------------------------
# 1. zero-drift singleton oracle
# --------------------------------------------------------------------------

def test_acceptance_1_singleton_zero_drift(singleton0):
    params = ProblemParams(1.0, 1.0, 2.0)
    sol = solve(singleton0, params)
    rep = rejection_report(singleton0, params, sol)
    assert sol.gamma == pytest.approx(1.0, rel=1e-8)
    np.testing.assert_allclose(sol.v_grid, 2.0 * sol.z_grid,
                               rtol=1e-8, atol=1e-12)
    assert rep.beta == pytest.approx(0.5, rel=1e-8)
    _report(1, f"gamma={sol.gamma:.12g}, v linear, beta={rep.beta:.12g}")


# --------------------------------------------------------------------------
# 2. unit-drift singleton oracle
# --------------------------------------------------------------------------

def test_acceptance_2_singleton_unit_drift(singleton1):
    for p in (0.5, 1.0, 2.0, 10.0):
        params = ProblemParams(1.0, 1.0, p)
        sol = solve(singleton1, params)
        rep = rejection_report(singleton1, params, sol)
        assert sol.gamma == pytest.approx(p / (E2 - 1.0), rel=1e-8)
        assert rep.beta == pytest.approx(1.0 / (E2 - 1.0), rel=1e-8)
        assert sol.gamma == pytest.approx(p * rep.beta, rel=1e-8)
    _report(2, "gamma = p/(e^2-1), beta = 1/(e^2-1), gamma = p*beta "
               "for p in {0.5, 1, 2, 10}")


# --------------------------------------------------------------------------
# 3. control-equation residual for the energy-cost model
# --------------------------------------------------------------------------

def test_acceptance_3_bellman_residual(exp_model):
    worst = 0.0
    for p in (0.5, 2.0, 5.0, 20.0):
        params = ProblemParams(1.0, 1.0, p)
        sol = solve(exp_model, params, n_z=32_769)   # check_ode cross-check on
        assert sol.v_grid[0] == 0.0
        assert abs(sol.v_grid[-1] - p) <= 1e-6 * p
        assert sol.residual_max <= 1e-6, f"p={p}: residual {sol.residual_max:.3g}"
        worst = max(worst, sol.residual_max)
    _report(3, f"max residual {worst:.3g} <= 1e-6 for p in {{0.5, 2, 5, 20}}")


# --------------------------------------------------------------------------
# 4. Monte Carlo agreement at the pinned discretization
# --------------------------------------------------------------------------

def test_acceptance_4_monte_carlo_agreement(exp_model):
    # Pinned configuration: T = 1e4, dt = 1e-3, 64 replications, 2 percent.
    # The projection scheme's boundary bias at dt = 1e-3 exceeds this
    # tolerance (see the module docstring); the check is implemented as
    # stated and reports the measured discrepancy.
    params = ProblemParams(1.0, 1.0, 5.0)
    sol = solve(exp_model, params, n_z=4097)
    rep = rejection_report(exp_model, params, sol)
    cfg = SimConfig(dt=1e-3, horizon=1e4, n_reps=64, seed=20240)
    res = simulate(exp_model, sol.policy, params, cfg)
    cost_err = abs(res.avg_cost_mean - sol.gamma)
    drop_err = abs(res.drop_rate_mean - rep.beta)
    cost_tol = max(3.0 * res.avg_cost_se, 0.02 * sol.gamma)
    drop_tol = max(3.0 * res.drop_rate_se, 0.02 * rep.beta)
    assert cost_err <= cost_tol, (
        f"avg cost {res.avg_cost_mean:.6g} vs gamma {sol.gamma:.6g}: "
        f"err {cost_err:.4g} > tol {cost_tol:.4g} "
        f"({cost_err / sol.gamma:.2%} relative)")
    assert drop_err <= drop_tol, (
        f"drop rate {res.drop_rate_mean:.6g} vs beta {rep.beta:.6g}: "
        f"err {drop_err:.4g} > tol {drop_tol:.4g} "
        f"({drop_err / rep.beta:.2%} relative)")
    _report(4, f"cost err {cost_err:.3g} <= {cost_tol:.3g}, "
               f"drop err {drop_err:.3g} <= {drop_tol:.3g}")


# --------------------------------------------------------------------------
# 5. statistical optimality of the computed policy
# --------------------------------------------------------------------------

def test_acceptance_5_policy_optimality(exp_model):
    params = ProblemParams(1.0, 1.0, 5.0)
    sol = solve(exp_model, params, n_z=4097)
    cfg = SimConfig(dt=1e-3, horizon=2000.0, n_reps=48, seed=501)
    rows = compare_policies(
        exp_model, params,
        [("optimal", sol.policy),
         ("constant-least", lambda z: np.zeros_like(z)),
         ("constant-top", lambda z: np.full_like(z, math.log(5.0))),
         ("constant-mid", lambda z: np.full_like(z, 0.5 * math.log(5.0)))],
        cfg)   # raises if the optimal policy loses beyond 3 paired SEs
    best = rows[0]
    assert best["name"] == "optimal"
    _report(5, "optimal policy beats three constant alternatives: "
               + ", ".join(f"{r['name']}={r['avg_cost']:.4f}" for r in rows))


# --------------------------------------------------------------------------
# 6. dual round trip
# --------------------------------------------------------------------------

def test_acceptance_6_dual_round_trip(exp_model):
    system = SystemParams(1.0, 1.0)
    for p in (1.5, 2.0, 5.0, 10.0, 20.0):
        params = system.with_penalty(p)
        fwd = rejection_report(exp_model, params, solve(exp_model, params))
        dual = solve_dual(exp_model, system, ConstraintSpec(fwd.beta))
        assert abs(dual.p_star - p) <= 1e-6 * p, (
            f"p={p}: recovered {dual.p_star}")
        assert abs(dual.energy_cost
                   - (dual.gamma - dual.p_star * dual.beta)) <= 1e-8
    _report(6, "penalty recovered to 1e-6 for 5 budgets; energy cost "
               "consistent to 1e-8")


# --------------------------------------------------------------------------
# 7. structure suite
# --------------------------------------------------------------------------

def test_acceptance_7a_conjugate_structure(exp_model, two_point):
    for m in (exp_model, two_point):
        ys = np.unique(np.concatenate([
            np.linspace(0.0, 8.0, 321),
            np.asarray(m.conjugate.breakpoints, dtype=float)]))
        acts = m.best_action(ys)
        assert np.all(np.diff(acts) >= 0.0)
        for bp in m.conjugate.breakpoints:
            assert m.best_action(float(bp)) == pytest.approx(
                m.best_action(float(bp) * (1.0 - 1e-12)), abs=1e-9)
        ham = m.hamiltonian(ys)
        assert ham[0] == 0.0
        mids = m.hamiltonian(0.5 * (ys[:-2] + ys[2:]))
        assert np.all(mids <= 0.5 * ham[:-2] + 0.5 * ham[2:] + 1e-10)
        splits = [float(b) for b in m.conjugate.breakpoints]
        for y in (0.9, 2.7, 6.1):
            ref, _ = quad(lambda u: float(m.best_action(u)), 0.0, y,
                          points=[s for s in splits if s < y], limit=200)
            assert m.hamiltonian(y) == pytest.approx(ref, rel=1e-8, abs=1e-10)
    _report("7a", "smallest maximizer monotone and left-continuous; value "
                  "transform convex, zero at 0, integral-consistent to 1e-8")


def _sweep_rates(model, p_grid, n_z):
    rates = []
    for p in p_grid:
        params = ProblemParams(1.0, 1.0, float(p))
        sol = solve(model, params, n_z=n_z)
        rates.append(rejection_report(model, params, sol).beta)
    return np.asarray(rates)


def test_acceptance_7b_drop_rate_sweep_unbounded(exp_model):
    grid = np.geomspace(1e-3, 1e3, 50)
    rates = _sweep_rates(exp_model, grid, 1025)
    assert np.all(np.diff(rates) <= rates[:-1] * 1e-9 + 1e-15)
    beta_star = 0.5   # least-drift rate, sigma2 / (2 b)
    assert abs(rates[0] - beta_star) <= 0.01 * beta_star
    _report("7b", f"drop rate nonincreasing over 50-point log grid; "
                  f"rate at p=1e-3 within 1% of the free rate {beta_star}")


def test_acceptance_7c_drop_rate_sweep_bounded(two_point):
    grid = np.geomspace(1e-3, 1e3, 50)
    rates = _sweep_rates(two_point, grid, 4097)
    assert np.all(np.diff(rates) <= rates[:-1] * 1e-9 + 1e-15)
    beta_star = 0.5
    beta_floor = 1.0 / (E2 - 1.0)   # constant top-drift rate
    assert abs(rates[0] - beta_star) <= 0.01 * beta_star
    assert abs(rates[-1] - beta_floor) <= 0.01 * beta_floor
    _report("7c", f"bounded variant endpoints within 1%: "
                  f"{rates[0]:.6f} vs {beta_star}, {rates[-1]:.6f} vs "
                  f"{beta_floor:.6f}")


def test_acceptance_7d_policy_structure(exp_model, two_point):
    for m, p in ((exp_model, 5.0), (two_point, 2.0)):
        params = ProblemParams(1.0, 1.0, p)
        sol = solve(m, params)
        assert np.all(np.diff(sol.theta_grid) >= 0.0)
        assert np.all(m.contains(sol.theta_grid))
    _report("7d", "policies nondecreasing with values in the action set")


# --------------------------------------------------------------------------
# 8. determinism of file outputs
# --------------------------------------------------------------------------

def test_acceptance_8_determinism(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("""\
model:
  domain: [[0.0, .inf]]
  cost: [{kind: exponential, alpha: 1.0}]
params: {sigma2: 1.0, b: 1.0, p: 2.0}
sim: {dt: 1.0e-3, horizon: 100.0, n_reps: 8, seed: 77}
solver: {n_z: 2049, mc_tolerance: 0.30}
""")
    for cmd, files in (
        (["solve"], ["policy.csv", "summary.txt"]),
        (["sweep", "--p-grid", "0.5:4:4:log"], ["sweep.csv"]),
        (["simulate", "--dump-path"], ["sim_summary.txt", "occupancy.csv",
                                       "path.csv"]),
    ):
        out1, out2 = tmp_path / f"{cmd[0]}_1", tmp_path / f"{cmd[0]}_2"
        rc1 = main([cmd[0], "--config", str(cfg), "--out", str(out1)] + cmd[1:])
        rc2 = main([cmd[0], "--config", str(cfg), "--out", str(out2)] + cmd[1:])
        assert rc1 == rc2 == 0
        for name in files:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
    _report(8, "solve, sweep, and simulate outputs bit-identical across reruns")
