import math

import numpy as np
import pytest

from driftctrl import (NotInActionSet, ProblemParams, SimConfig, StepTooLarge,
                       ValidationFailed, compare_policies, dump_path,
                       rejection_report, simulate, solve, validate_solution)

# relative drop-rate bias of the projection scheme is ~ 1.17 * sigma *
# sqrt(dt) / b at zero drift (measured; two-sided boundary effect), larger
# with drift; envelopes below use a generous multiple of that scale


def _zero(z):
    return np.zeros_like(z)


def test_determinism_bit_identical(singleton1, unit_params):
    cfg = SimConfig(dt=1e-3, horizon=20.0, n_reps=4, seed=99)
    a = simulate(singleton1, lambda z: np.full_like(z, 1.0), unit_params, cfg)
    b = simulate(singleton1, lambda z: np.full_like(z, 1.0), unit_params, cfg)
    np.testing.assert_array_equal(a.rep_costs, b.rep_costs)
    np.testing.assert_array_equal(a.rep_drops, b.rep_drops)
    np.testing.assert_array_equal(a.occupancy, b.occupancy)
    assert a.avg_cost_mean == b.avg_cost_mean


def test_seed_changes_output(singleton0, unit_params):
    cfg1 = SimConfig(dt=1e-3, horizon=20.0, n_reps=4, seed=1)
    cfg2 = SimConfig(dt=1e-3, horizon=20.0, n_reps=4, seed=2)
    a = simulate(singleton0, _zero, unit_params, cfg1)
    b = simulate(singleton0, _zero, unit_params, cfg2)
    assert not np.array_equal(a.rep_drops, b.rep_drops)


def test_path_confinement_and_monotone_pushes(singleton0, unit_params):
    cfg = SimConfig(dt=1e-3, horizon=50.0, n_reps=1, seed=5)
    t, z, l, u, xi = dump_path(singleton0, _zero, unit_params, cfg)
    assert np.all(z >= 0.0) and np.all(z <= unit_params.b)
    dl, du = np.diff(l), np.diff(u)
    assert np.all(dl >= 0.0) and np.all(du >= 0.0)
    # one-sided pushes per step under the step-size guard
    assert np.all((dl == 0.0) | (du == 0.0))
    assert l[0] == u[0] == 0.0
    # both boundaries are actually visited on an uncontrolled path
    assert l[-1] > 0.0 and u[-1] > 0.0
    assert xi[-1] == pytest.approx(unit_params.p * u[-1], rel=1e-12)


def test_step_too_large(singleton0, unit_params):
    with pytest.raises(StepTooLarge):
        simulate(singleton0, _zero, unit_params,
                 SimConfig(dt=0.25, horizon=10.0, n_reps=2, seed=0))


def test_inadmissible_policy_rejected(two_point, unit_params):
    cfg = SimConfig(dt=1e-3, horizon=5.0, n_reps=2, seed=0)
    with pytest.raises(NotInActionSet):
        simulate(two_point, lambda z: np.full_like(z, 0.5), unit_params, cfg)
    sol = solve(two_point, unit_params)
    with pytest.raises(NotInActionSet):
        simulate(two_point, lambda z: sol.policy(z) + 1e-3, unit_params, cfg)


def test_bad_initial_state(singleton0, unit_params):
    with pytest.raises(ValueError):
        simulate(singleton0, _zero, unit_params,
                 SimConfig(dt=1e-3, horizon=5.0, n_reps=1, seed=0, z0=2.0))


def test_zero_drift_drop_rate_bias_envelope(singleton0, unit_params):
    # exact rate is 0.5; discretization understates it by O(sqrt(dt))
    errs = {}
    for dt in (4e-3, 1e-3):
        cfg = SimConfig(dt=dt, horizon=1000.0, n_reps=24, seed=31)
        res = simulate(singleton0, _zero, unit_params, cfg)
        rel_err = abs(res.drop_rate_mean - 0.5) / 0.5
        envelope = 1.8 * 1.1652 * math.sqrt(dt) + 8.0 * res.drop_rate_se / 0.5
        assert rel_err <= envelope
        assert res.drop_rate_mean < 0.5   # bias direction is downward
        errs[dt] = rel_err
        # pure boundary-penalty cost here, so cost = p * drop rate
        assert res.avg_cost_mean == pytest.approx(
            unit_params.p * res.drop_rate_mean, rel=1e-12)
    assert errs[1e-3] < errs[4e-3]


def test_drop_rate_converges_with_dt(singleton1, unit_params):
    beta = 1.0 / (math.e ** 2 - 1.0)
    errs = []
    for dt in (1e-3, 2.5e-4):
        cfg = SimConfig(dt=dt, horizon=1000.0, n_reps=24, seed=17)
        res = simulate(singleton1, lambda z: np.full_like(z, 1.0),
                       unit_params, cfg)
        errs.append(abs(res.drop_rate_mean - beta) / beta)
    assert errs[1] < errs[0]
    assert errs[1] < 0.08


def test_heavy_drift_starves_upper_boundary(exp_model):
    params = ProblemParams(1.0, 1.0, 2.0)
    cfg = SimConfig(dt=1e-4, horizon=200.0, n_reps=4, seed=3)
    res = simulate(exp_model, lambda z: np.full_like(z, 50.0), params, cfg)
    assert res.drop_rate_mean <= 1e-4 * 0.5


def test_occupancy_accounting(singleton0, unit_params):
    cfg = SimConfig(dt=1e-3, horizon=100.0, n_reps=8, seed=12, burn_in=0.1)
    res = simulate(singleton0, _zero, unit_params, cfg)
    meas = res.n_steps - int(round(cfg.burn_in * res.n_steps))
    assert res.occupancy.sum() == meas * cfg.n_reps
    assert res.occupancy.min() >= 0


def test_se_scales_with_replications(singleton0, unit_params):
    ses = []
    for n in (16, 64, 256):
        cfg = SimConfig(dt=1e-3, horizon=100.0, n_reps=n, seed=8)
        ses.append(simulate(singleton0, _zero, unit_params, cfg).drop_rate_se)
    for hi, lo in zip(ses, ses[1:]):
        assert 1.5 <= hi / lo <= 2.7


def test_validate_solution_passes_when_noise_dominates_bias(singleton1, unit_params):
    # with dt this small the O(sqrt(dt)) bias sits well inside 3 standard
    # errors of a short-horizon run
    sol = solve(singleton1, unit_params)
    rep = rejection_report(singleton1, unit_params, sol)
    cfg = SimConfig(dt=1e-5, horizon=150.0, n_reps=16, seed=21)
    vr = validate_solution(singleton1, unit_params, sol, rep, cfg)
    assert vr.passed


def test_validate_solution_fails_on_coarse_step(singleton1, unit_params):
    # at dt = 1e-3 the boundary bias (~7 percent here) exceeds the 2
    # percent tolerance with small standard errors
    sol = solve(singleton1, unit_params)
    rep = rejection_report(singleton1, unit_params, sol)
    cfg = SimConfig(dt=1e-3, horizon=2000.0, n_reps=32, seed=22)
    with pytest.raises(ValidationFailed) as exc_info:
        validate_solution(singleton1, unit_params, sol, rep, cfg)
    assert exc_info.value.report is not None


def test_compare_policies_optimal_wins(exp_model):
    params = ProblemParams(1.0, 1.0, 5.0)
    sol = solve(exp_model, params)
    cfg = SimConfig(dt=1e-3, horizon=400.0, n_reps=24, seed=14)
    rows = compare_policies(
        exp_model, params,
        [("optimal", sol.policy),
         ("least-drift", lambda z: np.zeros_like(z)),
         ("max-used", lambda z: np.full_like(z, math.log(5.0))),
         ("midpoint", lambda z: np.full_like(z, 0.5 * math.log(5.0)))],
        cfg)
    assert rows[0]["name"] == "optimal"
    assert all(rows[0]["avg_cost"] <= r["avg_cost"] + 3.0 * r["se"] for r in rows)


def test_compare_policies_self_tie(exp_model):
    params = ProblemParams(1.0, 1.0, 5.0)
    sol = solve(exp_model, params)
    cfg = SimConfig(dt=2e-3, horizon=100.0, n_reps=8, seed=15)
    rows = compare_policies(exp_model, params,
                            [("a", sol.policy), ("b", sol.policy)], cfg)
    assert rows[0]["avg_cost"] == rows[1]["avg_cost"]


def test_compare_policies_inadmissible_alternative(two_point, unit_params):
    sol = solve(two_point, unit_params)
    cfg = SimConfig(dt=2e-3, horizon=50.0, n_reps=4, seed=16)
    with pytest.raises(NotInActionSet):
        compare_policies(two_point, unit_params,
                         [("optimal", sol.policy),
                          ("shifted", lambda z: sol.policy(z) + 0.01)], cfg)
