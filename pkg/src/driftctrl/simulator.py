"""Monte Carlo simulation of the controlled reflected diffusion.

Euler steps with an explicit two-sided projection: the free step
W = Z + sigma * sqrt(dt) * N - theta(Z) * dt is pushed back into [0, b],
crediting the push amounts to the lower (L) and upper (U) boundary
processes.  Cost accrues at the left endpoint of each step plus the
penalty on upper pushes.  The scheme has O(sqrt(dt)) weak bias at the
boundaries, which is monitored by halving dt rather than corrected.

Policies are snapped to a fine lookup table before stepping, which keeps
the per-step work trivial (and the snapped policy is itself admissible:
its values are exact policy values).  Replications use counter-based
Philox streams keyed by (seed, replication), so results do not depend on
execution order and runs are bit-for-bit reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import NotInActionSet, StepTooLarge, ValidationFailed

CHUNK = 1 << 20
HIST_BINS = 64
POLICY_TABLE_SIZE = 8193


@dataclass(frozen=True)
class SimConfig:
    dt: float
    horizon: float
    n_reps: int
    seed: int
    burn_in: float = 0.1
    z0: float | None = None

    def __post_init__(self):
        if self.dt <= 0.0 or self.horizon <= self.dt:
            raise ValueError("need 0 < dt < horizon")
        if self.n_reps < 1:
            raise ValueError("need at least one replication")
        if not 0.0 <= self.burn_in <= 0.5:
            raise ValueError("burn-in fraction must lie in [0, 0.5]")


@dataclass
class SimResult:
    avg_cost_mean: float
    avg_cost_se: float
    drop_rate_mean: float
    drop_rate_se: float
    loss_rate_mean: float
    loss_rate_se: float
    occupancy: np.ndarray          # int64 counts per bin, all reps pooled
    bin_edges: np.ndarray
    rep_costs: np.ndarray
    rep_drops: np.ndarray
    n_steps: int
    dt: float


@njit(cache=True)
def _advance(z, xi, lsum, usum, normals, noise_scale, dt, b, p,
             theta_tab, cost_dt_tab, tab_scale, hist, hist_scale, record_hist):
    n_tab = theta_tab.shape[0]
    n_bins = hist.shape[0]
    for k in range(normals.shape[0]):
        idx = int(z * tab_scale)
        if idx < 0:
            idx = 0
        elif idx >= n_tab:
            idx = n_tab - 1
        w = z + noise_scale * normals[k] - theta_tab[idx] * dt
        dl = -w if w < 0.0 else 0.0
        w = w + dl
        du = w - b if w > b else 0.0
        z = w - du
        xi += cost_dt_tab[idx] + p * du
        lsum += dl
        usum += du
        if record_hist:
            hb = int(z * hist_scale)
            if hb >= n_bins:
                hb = n_bins - 1
            hist[hb] += 1
    return z, xi, lsum, usum


@njit(cache=True)
def _advance_record(z, normals, noise_scale, dt, b, p,
                    theta_tab, cost_dt_tab, tab_scale, z_out, l_out, u_out, xi_out):
    n_tab = theta_tab.shape[0]
    xi = 0.0
    lsum = 0.0
    usum = 0.0
    z_out[0] = z
    for k in range(normals.shape[0]):
        idx = int(z * tab_scale)
        if idx < 0:
            idx = 0
        elif idx >= n_tab:
            idx = n_tab - 1
        w = z + noise_scale * normals[k] - theta_tab[idx] * dt
        dl = -w if w < 0.0 else 0.0
        w = w + dl
        du = w - b if w > b else 0.0
        z = w - du
        xi += cost_dt_tab[idx] + p * du
        lsum += dl
        usum += du
        z_out[k + 1] = z
        l_out[k + 1] = lsum
        u_out[k + 1] = usum
        xi_out[k + 1] = xi


def _policy_tables(model, policy, params, resolution):
    """Snap the policy to a lookup table and precompute per-step costs."""
    z = np.linspace(0.0, params.b, resolution)
    vals = policy(z)
    theta = np.asarray(vals, dtype=float)
    if theta.shape != z.shape:
        if theta.ndim == 0:
            theta = np.full(z.shape, float(theta))
        else:
            theta = np.asarray([float(policy(float(zi))) for zi in z])
    if not np.all(np.isfinite(theta)):
        raise NotInActionSet("policy returned non-finite drift values")
    inside = model.contains(theta)
    if not np.all(inside):
        bad = theta[~inside]
        raise NotInActionSet(
            f"policy values outside the action set, e.g. {bad[:3]}")
    cost = np.asarray(model.cost(theta), dtype=float)
    return np.ascontiguousarray(theta), np.ascontiguousarray(cost)


def _rep_rng(seed, rep):
    key = np.array([np.uint64(seed & (2 ** 64 - 1)), np.uint64(rep)])
    return np.random.Generator(np.random.Philox(key=key))


def _check_step(params, config):
    sigma = math.sqrt(params.sigma2)
    if sigma * math.sqrt(config.dt) > params.b / 4.0:
        raise StepTooLarge(
            f"sigma*sqrt(dt) = {sigma * math.sqrt(config.dt):.3g} exceeds b/4; "
            "the single-step projection scheme is invalid at this resolution")


def simulate(model, policy, params, config, policy_resolution=POLICY_TABLE_SIZE):
    """Estimate long-run average cost and boundary push rates under a policy.

    Returns replication means with standard errors and a pooled occupancy
    histogram.  Deterministic for a fixed config (seed included).
    """
    _check_step(params, config)
    theta_tab, cost_tab = _policy_tables(model, policy, params, policy_resolution)
    cost_dt_tab = cost_tab * config.dt
    b, p = params.b, params.p
    noise_scale = math.sqrt(params.sigma2 * config.dt)
    tab_scale = (policy_resolution - 1) / b
    hist_scale = HIST_BINS / b

    n_steps = int(round(config.horizon / config.dt))
    burn_steps = int(round(config.burn_in * n_steps))
    meas_steps = n_steps - burn_steps
    t_meas = meas_steps * config.dt
    z0 = 0.5 * b if config.z0 is None else float(config.z0)
    if not 0.0 <= z0 <= b:
        raise ValueError("z0 must lie in [0, b]")

    rep_costs = np.empty(config.n_reps)
    rep_drops = np.empty(config.n_reps)
    rep_losses = np.empty(config.n_reps)
    hist = np.zeros(HIST_BINS, dtype=np.int64)

    for rep in range(config.n_reps):
        rng = _rep_rng(config.seed, rep)
        z = z0
        xi = lsum = usum = 0.0
        remaining = burn_steps
        while remaining > 0:
            m = min(CHUNK, remaining)
            z, xi, lsum, usum = _advance(
                z, xi, lsum, usum, rng.standard_normal(m), noise_scale,
                config.dt, b, p, theta_tab, cost_dt_tab, tab_scale,
                hist, hist_scale, False)
            remaining -= m
        xi = lsum = usum = 0.0
        remaining = meas_steps
        while remaining > 0:
            m = min(CHUNK, remaining)
            z, xi, lsum, usum = _advance(
                z, xi, lsum, usum, rng.standard_normal(m), noise_scale,
                config.dt, b, p, theta_tab, cost_dt_tab, tab_scale,
                hist, hist_scale, True)
            remaining -= m
        rep_costs[rep] = xi / t_meas
        rep_drops[rep] = usum / t_meas
        rep_losses[rep] = lsum / t_meas

    def _se(x):
        if len(x) < 2:
            return float("nan")
        return float(np.std(x, ddof=1) / math.sqrt(len(x)))

    edges = np.linspace(0.0, b, HIST_BINS + 1)
    return SimResult(
        float(np.mean(rep_costs)), _se(rep_costs),
        float(np.mean(rep_drops)), _se(rep_drops),
        float(np.mean(rep_losses)), _se(rep_losses),
        hist, edges, rep_costs, rep_drops, n_steps, config.dt,
    )


def dump_path(model, policy, params, config, policy_resolution=POLICY_TABLE_SIZE):
    """Single-replication sample path (t, Z, L, U, xi); large for small dt."""
    _check_step(params, config)
    theta_tab, cost_tab = _policy_tables(model, policy, params, policy_resolution)
    n_steps = int(round(config.horizon / config.dt))
    z0 = 0.5 * params.b if config.z0 is None else float(config.z0)
    rng = _rep_rng(config.seed, 0)
    z_out = np.zeros(n_steps + 1)
    l_out = np.zeros(n_steps + 1)
    u_out = np.zeros(n_steps + 1)
    xi_out = np.zeros(n_steps + 1)
    _advance_record(
        z0, rng.standard_normal(n_steps), math.sqrt(params.sigma2 * config.dt),
        config.dt, params.b, params.p, theta_tab, cost_tab * config.dt,
        (policy_resolution - 1) / params.b, z_out, l_out, u_out, xi_out)
    t = np.arange(n_steps + 1) * config.dt
    return t, z_out, l_out, u_out, xi_out


@dataclass
class ValidationReport:
    sim: SimResult
    gamma: float
    beta: float
    cost_error: float
    cost_tol: float
    drop_error: float
    drop_tol: float
    cost_ok: bool
    drop_ok: bool

    @property
    def passed(self):
        return self.cost_ok and self.drop_ok


def validate_solution(model, params, solution, report, config, tol_mc=0.02):
    """Simulate the optimal policy and compare with the analytic outputs.

    Agreement is required within max(3 standard errors, tol_mc relative)
    on both the average cost and the drop rate; a miss raises
    ValidationFailed naming the offending statistic.
    """
    sim = simulate(model, solution.policy, params, config)
    gamma, beta = solution.gamma, report.beta
    cost_err = abs(sim.avg_cost_mean - gamma)
    drop_err = abs(sim.drop_rate_mean - beta)
    cost_tol = max(3.0 * sim.avg_cost_se, tol_mc * abs(gamma))
    drop_tol = max(3.0 * sim.drop_rate_se, tol_mc * abs(beta))
    vr = ValidationReport(sim, gamma, beta, cost_err, cost_tol,
                          drop_err, drop_tol,
                          cost_err <= cost_tol, drop_err <= drop_tol)
    if not vr.passed:
        parts = []
        if not vr.cost_ok:
            parts.append(
                f"average cost {sim.avg_cost_mean:.6g} vs analytic {gamma:.6g} "
                f"(err {cost_err:.3g} > tol {cost_tol:.3g})")
        if not vr.drop_ok:
            parts.append(
                f"drop rate {sim.drop_rate_mean:.6g} vs analytic {beta:.6g} "
                f"(err {drop_err:.3g} > tol {drop_tol:.3g})")
        raise ValidationFailed("; ".join(parts), report=vr)
    return vr


def compare_policies(model, params, policies, config):
    """Simulate policies under common random numbers and rank by cost.

    policies: sequence of (name, callable); the first entry is the
    reference (expected-optimal) policy.  Raises ValidationFailed if the
    reference loses to any alternative by more than 3 standard errors of
    the paired difference.  Returns rows sorted by mean cost.
    """
    names = [name for name, _ in policies]
    costs = np.empty((len(policies), config.n_reps))
    for i, (_, pol) in enumerate(policies):
        res = simulate(model, pol, params, config)
        costs[i] = res.rep_costs
    rows = []
    for i, name in enumerate(names):
        se = float(np.std(costs[i], ddof=1) / math.sqrt(config.n_reps)) \
            if config.n_reps > 1 else float("nan")
        rows.append({"name": name, "avg_cost": float(np.mean(costs[i])), "se": se})
    for i in range(1, len(policies)):
        diff = costs[0] - costs[i]
        se_diff = float(np.std(diff, ddof=1) / math.sqrt(config.n_reps)) \
            if config.n_reps > 1 else 0.0
        if float(np.mean(diff)) > 3.0 * se_diff:
            raise ValidationFailed(
                f"reference policy '{names[0]}' costs more than '{names[i]}' "
                f"by {np.mean(diff):.6g} (> 3 * paired se {se_diff:.3g})")
    return sorted(rows, key=lambda r: r["avg_cost"])
