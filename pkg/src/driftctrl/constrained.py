"""Budgeted formulation: minimize average energy cost subject to a cap on
the long-run drop rate, solved by dualizing the cap into a penalty.

The drop rate under the optimal penalized policy is constant below the
least-action threshold and then strictly decreasing, so a budget strictly
between the structural bounds pins a unique penalty rate p_star with
drop_rate(p_star) = budget.  Each candidate penalty requires a full solve,
so evaluations are cached and the outer root finder is a safeguarded
bracketing method with a hard iteration cap.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from scipy.optimize import brentq

from .bellman import DEFAULT_NZ, SystemParams, solve
from .cost_model import ActionSet, CostSpec, ExponentialCost, validate
from .errors import BracketingFailed, InfeasibleBudget, NonPositiveParameter, SlackBudgetWarning
from .rejection import drop_rate_bounds, rejection_report

_MAX_ROOT_ITER = 60


@dataclass(frozen=True)
class ConstraintSpec:
    """Admissible long-run drop-rate budget (strictly positive)."""

    beta_hat: float

    def __post_init__(self):
        if self.beta_hat <= 0.0:
            raise NonPositiveParameter("drop-rate budget must be positive")


@dataclass
class DualSolution:
    """Outcome of the budgeted solve.

    slack means the budget is already met by the zero-cost least-drift
    policy; p_star is then 0 and no penalized solve is attached.
    """

    beta_hat: float
    p_star: float
    gamma: float
    beta: float
    energy_cost: float
    slack: bool
    solution: object      # BellmanSolution, None when slack
    report: object        # RejectionReport, None when slack


def wireless_setup(arrival_rate, delay_bound, energy_exponent, sigma,
                   least_drift=0.0):
    """Build the transmission-power control model for a finite link buffer.

    The buffer size is arrival_rate * delay_bound (a delay cap restated as
    a content cap), the action set is [least_drift, inf), and energy is
    priced exponentially in the drift above the least value.  Returns the
    validated model and the system geometry without a penalty rate.
    """
    for name, val in (("arrival_rate", arrival_rate), ("delay_bound", delay_bound),
                      ("energy_exponent", energy_exponent), ("sigma", sigma)):
        if val <= 0.0:
            raise NonPositiveParameter(f"{name} must be strictly positive")
    b = arrival_rate * delay_bound
    model = validate(
        ActionSet([(least_drift, math.inf)]),
        CostSpec([ExponentialCost(energy_exponent, least_drift)]),
    )
    return model, SystemParams(sigma * sigma, b)


def solve_dual(model, system, spec, n_z=DEFAULT_NZ):
    """Find the penalty rate whose optimal policy meets the drop budget.

    Infeasible budgets (at or below the maximal-drift rate) raise; slack
    budgets (at or above the least-drift rate) warn and return the free
    policy.  Otherwise brackets [least-action threshold, doubling upper]
    and runs a safeguarded secant/bisection hybrid on
    p -> drop_rate(p) - budget, caching the inner solves.
    """
    beta_hat = spec.beta_hat
    upper, lower = drop_rate_bounds(model, system)
    if beta_hat <= lower:
        raise InfeasibleBudget(
            f"budget {beta_hat:.6g} is unattainable: even maximal drift only "
            f"reaches {lower:.6g}")
    if beta_hat >= upper:
        warnings.warn(
            f"budget {beta_hat:.6g} is not binding: the free least-drift "
            f"policy already drops at rate {upper:.6g}",
            SlackBudgetWarning,
        )
        return DualSolution(beta_hat, 0.0, 0.0, upper, 0.0, True, None, None)

    cache = {}

    def run(p):
        if p not in cache:
            params = system.with_penalty(p)
            sol = solve(model, params, n_z=n_z)
            cache[p] = (sol, rejection_report(model, params, sol))
        return cache[p]

    def gap(p):
        return run(p)[1].beta - beta_hat

    p0 = model.least_action_threshold()
    p_lo = max(p0 if math.isfinite(p0) else 1e-3, 1e-3)
    if gap(p_lo) <= 0.0:
        # budget within numerical wash of the free rate; treat as slack
        warnings.warn(
            f"budget {beta_hat:.6g} indistinguishable from the free rate "
            f"{upper:.6g} at the bracketing resolution",
            SlackBudgetWarning,
        )
        return DualSolution(beta_hat, 0.0, 0.0, upper, 0.0, True, None, None)

    p_hi = max(2.0 * p_lo, 1.0)
    doublings = 0
    while gap(p_hi) >= 0.0:
        p_hi *= 2.0
        doublings += 1
        if doublings > 200:
            raise BracketingFailed("no upper bracket for the dual penalty")

    p_star = float(brentq(gap, p_lo, p_hi, xtol=1e-300, rtol=1e-12,
                          maxiter=_MAX_ROOT_ITER))
    sol, rep = run(p_star)
    energy = sol.gamma - p_star * rep.beta
    return DualSolution(beta_hat, p_star, sol.gamma, rep.beta, energy,
                        False, sol, rep)
