"""Average-cost dynamic programming for the reflected buffer.

The control equation for the marginal value v on [0, b] is

    gamma = (sigma2 / 2) * v'(z) - hamiltonian(v(z)),   v(0) = 0,  v(b) = p,

where gamma is the optimal long-run average cost.  The solve proceeds in
two steps that mirror the analysis:

1. gamma is the unique root of (sigma2 / 2) * span_integral(gamma, p) = b,
   where span_integral is the integral over [0, p] of
   1 / (hamiltonian(u) + gamma).  The integrand has kinks exactly at the
   best-action breakpoints, so the adaptive quadrature forces panel
   boundaries there.

2. v is recovered by inverting the strictly increasing map

    span_to(v) = (sigma2 / 2) * integral_0^v du / (hamiltonian(u) + gamma)

   from a dense table via monotone (shape-preserving) cubic interpolation,
   then polishing every grid node with safeguarded Newton steps against
   the exact integral.  An independent fixed-step RK4 shoot of the ODE
   cross-checks the upper boundary value.

The optimal policy is best_action composed with v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import (BracketingFailed, EndpointMismatch, GammaOutOfRange,
                     NonPositiveParameter, StateOutOfRange)

EPS_QUAD = 1e-10          # relative quadrature target
EPS_ROOT = 1e-10          # relative tolerance on the average-cost root
EPS_RESIDUAL = 1e-6       # absolute ceiling on the control-equation residual
EPS_BVP_REL = 1e-6        # |v_ode(b) - p| <= EPS_BVP_REL * p
DEFAULT_NZ = 1025
_DELTA_FLOOR = 1e-14      # lower-bracket shrink cap, relative

_GL_X, _GL_W = np.polynomial.legendre.leggauss(15)


@dataclass(frozen=True)
class SystemParams:
    """Buffer geometry: variance parameter sigma2 and buffer size b."""

    sigma2: float
    b: float

    def __post_init__(self):
        if self.sigma2 <= 0.0 or self.b <= 0.0:
            raise NonPositiveParameter("sigma2 and b must be strictly positive")

    def with_penalty(self, p):
        return ProblemParams(self.sigma2, self.b, p)


@dataclass(frozen=True)
class ProblemParams:
    """SystemParams plus the boundary-displacement penalty rate p."""

    sigma2: float
    b: float
    p: float

    def __post_init__(self):
        if self.sigma2 <= 0.0 or self.b <= 0.0 or self.p <= 0.0:
            raise NonPositiveParameter("sigma2, b, and p must be strictly positive")

    @property
    def system(self):
        return SystemParams(self.sigma2, self.b)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def _panels_gl15(f, lo, hi):
    """15-point Gauss-Legendre on each [lo_i, hi_i]; f must be vectorized."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = f(pts.ravel()).reshape(pts.shape)
    return (vals @ _GL_W) * half


def integrate_adaptive(f, a, b, splits=(), rel_tol=EPS_QUAD, max_levels=48):
    """Adaptive panel quadrature with forced boundaries at the splits.

    Panels are refined by bisection until the 15-point rule agrees with its
    two-half refinement to a per-panel share of the global tolerance.
    Deterministic for fixed inputs.
    """
    if b <= a:
        return 0.0
    edges = np.unique(np.asarray(
        [a, b] + [s for s in splits if a < s < b], dtype=float))
    lo = edges[:-1].copy()
    hi = edges[1:].copy()
    coarse = _panels_gl15(f, lo, hi)
    total = float(np.sum(coarse))
    acc = 0.0
    span = b - a
    for _ in range(max_levels):
        if lo.size == 0:
            return acc
        mid = 0.5 * (lo + hi)
        left = _panels_gl15(f, lo, mid)
        right = _panels_gl15(f, mid, hi)
        refined = left + right
        tol = rel_tol * max(abs(total), 1e-300) * (hi - lo) / span + 1e-300
        done = np.abs(refined - coarse) <= tol
        acc += float(np.sum(refined[done]))
        keep = ~done
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        coarse = np.concatenate([left[keep], right[keep]])
        total = acc + float(np.sum(coarse))
    return acc + float(np.sum(coarse))


def _splits_for(model, p):
    conj = model.conjugate
    pts = [float(x) for x in conj.breakpoints if 0.0 < x < p]
    if 0.0 < conj.descent_end < p:
        pts.append(float(conj.descent_end))
    return sorted(set(pts))


def span_integral(model, gamma, p):
    """Integral over [0, p] of 1 / (hamiltonian(u) + gamma).

    Strictly decreasing in gamma; diverges as gamma approaches the
    hamiltonian dip from above and vanishes as gamma grows.  At the optimal
    average cost it equals 2 * b / sigma2.
    """
    dip = model.hamiltonian_dip(p)
    if gamma <= dip:
        raise GammaOutOfRange(
            f"gamma = {gamma:.6g} is at or below the feasible floor {dip:.6g}")

    def integrand(u):
        return 1.0 / (model.hamiltonian(u) + gamma)

    return integrate_adaptive(integrand, 0.0, p, _splits_for(model, p))


# ---------------------------------------------------------------------------
# average cost
# ---------------------------------------------------------------------------

def solve_average_cost(model, params):
    """Unique gamma with (sigma2 / 2) * span_integral(gamma, p) = b."""
    p, b, sigma2 = params.p, params.b, params.sigma2
    target = 2.0 * b / sigma2
    dip = model.hamiltonian_dip(p)
    scale = max(1.0, dip)

    delta = 0.5 * scale
    while span_integral(model, dip + delta, p) <= target:
        delta *= 0.1
        if delta < _DELTA_FLOOR * scale:
            raise BracketingFailed(
                "no lower bracket for the average cost; the span integral "
                "stays below 2b/sigma2 arbitrarily close to the feasible floor")
    lo = dip + delta

    hi = max(1.0, dip + 1.0)
    while hi <= lo:
        hi *= 2.0
    doublings = 0
    while span_integral(model, hi, p) >= target:
        hi *= 2.0
        doublings += 1
        if doublings > 1024:
            raise BracketingFailed("no upper bracket for the average cost")

    gamma = brentq(
        lambda g: span_integral(model, g, p) - target,
        lo, hi, xtol=1e-300, rtol=1e-12, maxiter=256,
    )
    return float(gamma)


# ---------------------------------------------------------------------------
# marginal value
# ---------------------------------------------------------------------------

@dataclass
class MarginalValue:
    """Monotone table of the marginal value v on a uniform state grid."""

    z_grid: np.ndarray
    values: np.ndarray
    gamma: float
    params: ProblemParams
    _interp: PchipInterpolator
    _model: object
    _vnodes: np.ndarray
    _span: np.ndarray

    def __call__(self, z):
        out = self._interp(np.clip(z, 0.0, self.params.b))
        return np.clip(out, 0.0, self.params.p)

    def refined(self, z):
        """Marginal value at arbitrary states by Newton inversion of the
        exact span map (machine accurate, unlike the cubic table)."""
        z = np.clip(np.asarray(z, dtype=float), 0.0, self.params.b)
        flat = z.ravel()
        out = _invert_span(self._model, self.gamma, self.params,
                           self._vnodes, self._span, flat, self(flat))
        return out.reshape(z.shape)


def _span_nodes(model, gamma, p):
    """Quadrature nodes in v-space: uniform fill, breakpoint refinement,
    and a log-refined approach to 0 when gamma is small."""
    nodes = [np.linspace(0.0, p, 513)]
    offsets = np.geomspace(1e-10, 1e-3, 8) * p
    for s in _splits_for(model, p):
        nodes.append(np.clip(s + offsets, 0.0, p))
        nodes.append(np.clip(s - offsets, 0.0, p))
        nodes.append(np.array([s]))
    log_lo = max(min(gamma, p) * 1e-3, p * 1e-18, 5e-300)
    nodes.append(np.geomspace(log_lo, p, 129))
    allv = np.unique(np.concatenate(nodes))
    keep = [allv[0]]
    for v in allv[1:]:
        if v - keep[-1] > 1e-15 * max(1.0, abs(v)):
            keep.append(v)
    if keep[-1] != p:
        keep.append(p)
    return np.asarray(keep)


def _invert_span(model, gamma, params, vnodes, G, z, v_guess):
    """Solve span_to(v) = z by Newton steps inside the bracketing table
    interval, where the integrand is smooth.  Vectorized over z."""
    sigma2 = params.sigma2

    def integrand(u):
        return 1.0 / (model.hamiltonian(u) + gamma)

    j = np.clip(np.searchsorted(G, z, side="right") - 1, 0, len(G) - 2)
    v_lo, v_hi = vnodes[j], vnodes[j + 1]
    g_base = G[j]
    v = np.clip(np.asarray(v_guess, dtype=float), v_lo, v_hi)
    for _ in range(6):
        half = 0.5 * (v - v_lo)
        mid = 0.5 * (v + v_lo)
        pts = mid[:, None] + half[:, None] * _GL_X[None, :]
        vals = integrand(pts.ravel()).reshape(pts.shape)
        span_here = g_base + (vals @ _GL_W) * half * (0.5 * sigma2)
        resid = span_here - z
        slope = (0.5 * sigma2) * integrand(v)
        v = np.clip(v - resid / slope, v_lo, v_hi)
    return v


def solve_marginal_value(model, params, gamma, n_z=DEFAULT_NZ, check_ode=True):
    """Build v on a uniform grid of n_z points by inverting the span map.

    The forward map span_to(v) is tabulated with per-interval Gauss rules
    (panel edges at every best-action breakpoint, so each panel is smooth),
    inverted with a monotone cubic, and then every node is polished with
    Newton iterations against the exact local integral.  The endpoints
    v(0) = 0 and v(b) = p hold exactly.  A fixed-step RK4 integration of
    v' = (2 / sigma2) * (hamiltonian(v) + gamma) provides an independent
    check of the upper boundary value.
    """
    p, b, sigma2 = params.p, params.b, params.sigma2
    vnodes = _span_nodes(model, gamma, p)

    def integrand(u):
        return 1.0 / (model.hamiltonian(u) + gamma)

    seg = _panels_gl15(integrand, vnodes[:-1], vnodes[1:])
    G = np.concatenate([[0.0], np.cumsum(seg)]) * (0.5 * sigma2)
    if abs(G[-1] - b) > 1e-7 * b:
        raise EndpointMismatch(
            f"span table reaches {G[-1]:.12g} at v = p, expected b = {b:.12g}; "
            "gamma is inconsistent with the quadrature")
    # micro-intervals can underflow to zero span; the inverse interpolant
    # needs strictly increasing abscissae
    keep = np.concatenate([[True], np.diff(G) > 0.0])
    G, vnodes = G[keep], vnodes[keep]

    z_grid = np.linspace(0.0, b, n_z)
    inverse = PchipInterpolator(G, vnodes)
    guess = np.clip(inverse(np.minimum(z_grid, G[-1])), 0.0, p)
    v = _invert_span(model, gamma, params, vnodes, G, z_grid, guess)
    v[0] = 0.0
    v[-1] = p
    if np.any(np.diff(v) < 0.0):
        raise EndpointMismatch("inverted marginal value is not monotone")

    mv = MarginalValue(z_grid, v, float(gamma), params,
                       PchipInterpolator(z_grid, v), model, vnodes, G)
    if check_ode:
        v_end = _rk4_shoot(model, params, gamma)
        if abs(v_end - p) > EPS_BVP_REL * p:
            raise EndpointMismatch(
                f"ODE shoot reaches v(b) = {v_end:.12g}, expected p = {p:.12g} "
                f"(tolerance {EPS_BVP_REL * p:.3g})")
    return mv


def _rk4_shoot(model, params, gamma, n_steps=4096):
    """Integrate v' = (2/sigma2)(hamiltonian(v) + gamma) from v(0) = 0."""
    h = params.b / n_steps
    c = 2.0 / params.sigma2

    def rhs(v):
        return c * (model.hamiltonian(max(v, 0.0)) + gamma)

    v = 0.0
    for _ in range(n_steps):
        k1 = rhs(v)
        k2 = rhs(v + 0.5 * h * k1)
        k3 = rhs(v + 0.5 * h * k2)
        k4 = rhs(v + h * k3)
        v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return v


# ---------------------------------------------------------------------------
# relative value, policy, residual
# ---------------------------------------------------------------------------

def relative_value(model, params, mv):
    """Relative value f on the state grid: the running integral of v.

    Computed as the exact antiderivative of the monotone cubic through the
    v table, so f(0) = 0 and f inherits convexity from v increasing.
    """
    anti = mv._interp.antiderivative()
    return anti(mv.z_grid) - anti(0.0)


def policy(model, params, mv, z):
    """Optimal drift rate at state z: best_action evaluated at v(z)."""
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < -1e-12) or np.any(z_arr > params.b * (1.0 + 1e-12)):
        raise StateOutOfRange(f"state outside [0, {params.b}]")
    return model.best_action(mv(z_arr))


def bellman_residual(model, params, solution):
    """Max control-equation residual on the interior grid.

    v' is estimated with centered differences of the table, so the result
    reflects both equation satisfaction and grid resolution.
    """
    z, v, gamma = solution.z_grid, solution.v_grid, solution.gamma
    h = z[1] - z[0]
    dv = (v[2:] - v[:-2]) / (2.0 * h)
    res = np.abs(0.5 * params.sigma2 * dv - model.hamiltonian(v[1:-1]) - gamma)
    return float(res.max())


# ---------------------------------------------------------------------------
# full solve
# ---------------------------------------------------------------------------

@dataclass
class BellmanSolution:
    """Average cost, marginal/relative value tables, and the policy."""

    model: object
    params: ProblemParams
    gamma: float
    z_grid: np.ndarray
    v_grid: np.ndarray
    f_grid: np.ndarray
    theta_grid: np.ndarray
    residual_max: float
    marginal: MarginalValue

    def v(self, z):
        return self.marginal(z)

    def f(self, z):
        anti = self.marginal._interp.antiderivative()
        return anti(np.clip(z, 0.0, self.params.b))

    def policy(self, z):
        return policy(self.model, self.params, self.marginal, z)

    def policy_refined(self, z):
        """Policy through the Newton-polished marginal value; smooth to
        machine precision between true best-action breakpoints, unlike the
        cubic-table path which carries curvature wiggles at grid nodes."""
        return self.model.best_action(self.marginal.refined(z))


def solve(model, params, n_z=DEFAULT_NZ, check_ode=True):
    """Full pipeline: average cost, marginal value, relative value, policy."""
    gamma = solve_average_cost(model, params)
    mv = solve_marginal_value(model, params, gamma, n_z=n_z, check_ode=check_ode)
    f_grid = relative_value(model, params, mv)
    theta_grid = model.best_action(mv.values)
    sol = BellmanSolution(model, params, gamma, mv.z_grid, mv.values,
                          f_grid, theta_grid, math.nan, mv)
    sol.residual_max = bellman_residual(model, params, sol)
    return sol
