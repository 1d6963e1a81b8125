"""Action sets, control costs, and their convex duals.

The controller picks a (negative) drift rate from a closed subset of the
real line: a finite union of closed intervals and isolated points with a
least element ``theta_star``.  Effort is priced by a nondecreasing
cost-of-control that is zero at the least element.  Everything downstream
consumes the model through two derived functions of a nonnegative marginal
value y:

    hamiltonian(y)  = sup { y*x - cost(x) : x in A }
    best_action(y)  = the smallest x attaining that supremum

Both are evaluated exactly from a finite candidate set (piece endpoints,
isolated points, and stationary points of each analytic cost family), so
no generic numerical optimization is involved.  ``best_action`` is
nondecreasing and left-continuous in y; ``hamiltonian`` is convex, starts
at zero, and equals the running integral of ``best_action``.

Supported cost families per piece: linear, power, exponential, and
monotone sampled tables (piecewise linear).  Restricting to these families
keeps the superlinear-growth requirement for unbounded action sets
checkable symbolically and the candidate set finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ModelValidationError, NotInActionSet, Violation

# Tolerances (absolute unless noted).
EPS_VAL = 1e-9        # normalization check cost(theta_star) = 0
EPS_MEM = 1e-9        # action-set membership
EPS_TIE = 1e-12       # relative: argmax candidates closer than this tie
EPS_INT = 1e-8        # relative: hamiltonian vs. integral-of-best-action

_INF = math.inf


# ---------------------------------------------------------------------------
# cost families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearCost:
    """cost(x) = slope * x + intercept."""

    slope: float
    intercept: float = 0.0

    def value(self, x):
        return self.slope * np.asarray(x, dtype=float) + self.intercept

    def value_scalar(self, x):
        return self.slope * x + self.intercept


@dataclass(frozen=True)
class PowerCost:
    """cost(x) = coeff * (x - shift) ** exponent, defined for x >= shift."""

    coeff: float
    exponent: float
    shift: float = 0.0

    def __post_init__(self):
        if self.exponent <= 0.0:
            raise ValueError("power cost requires a positive exponent")

    def value(self, x):
        t = np.asarray(x, dtype=float) - self.shift
        return self.coeff * np.power(np.maximum(t, 0.0), self.exponent)

    def value_scalar(self, x):
        t = max(x - self.shift, 0.0)
        return self.coeff * t ** self.exponent

    def slope_at(self, x):
        t = max(x - self.shift, 0.0)
        e = self.exponent
        if e == 1.0:
            return self.coeff
        if t == 0.0:
            return 0.0 if e > 1.0 else _INF
        return self.coeff * e * t ** (e - 1.0)

    def stationary(self, y):
        """Solve d(cost)/dx = y for x; only meaningful when exponent > 1."""
        e = self.exponent
        ke = self.coeff * e
        t = np.power(np.maximum(np.asarray(y, dtype=float), 0.0) / ke, 1.0 / (e - 1.0))
        return self.shift + t

    def stationary_scalar(self, y):
        e = self.exponent
        ke = self.coeff * e
        if y <= 0.0:
            return self.shift
        return self.shift + (y / ke) ** (1.0 / (e - 1.0))


@dataclass(frozen=True)
class ExponentialCost:
    """cost(x) = exp(alpha * (x - shift)) - 1, the energy-per-drift price."""

    alpha: float
    shift: float = 0.0

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise ValueError("exponential cost requires alpha > 0")

    def value(self, x):
        return np.expm1(self.alpha * (np.asarray(x, dtype=float) - self.shift))

    def value_scalar(self, x):
        return math.expm1(self.alpha * (x - self.shift))

    def slope_at(self, x):
        return self.alpha * math.exp(self.alpha * (x - self.shift))

    def stationary(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.shift + np.log(np.maximum(y, 1e-300) / self.alpha) / self.alpha
        return out

    def stationary_scalar(self, y):
        if y <= 0.0:
            return -_INF
        return self.shift + math.log(y / self.alpha) / self.alpha


@dataclass(frozen=True)
class TableCost:
    """Sampled cost with piecewise-linear interpolation between knots."""

    xs: tuple = field()
    cs: tuple = field()

    def __post_init__(self):
        xs = tuple(float(v) for v in self.xs)
        cs = tuple(float(v) for v in self.cs)
        if len(xs) != len(cs) or not xs:
            raise ValueError("table cost needs matching, nonempty x and c lists")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("table cost knots must be strictly increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "cs", cs)

    def value(self, x):
        return np.interp(np.asarray(x, dtype=float), self.xs, self.cs)

    def value_scalar(self, x):
        return float(np.interp(x, self.xs, self.cs))


COST_FAMILIES = (LinearCost, PowerCost, ExponentialCost, TableCost)


# ---------------------------------------------------------------------------
# action set and cost spec
# ---------------------------------------------------------------------------

class ActionSet:
    """Finite union of disjoint closed intervals and isolated points.

    Entries may be scalars (isolated points) or (lo, hi) pairs; the last
    interval may have hi = inf.  Pieces must be sorted ascending and
    pairwise disjoint, and the set is nonempty with least element
    ``pieces[0][0]``.
    """

    __slots__ = ("pieces",)

    def __init__(self, entries):
        pieces = []
        for entry in entries:
            if np.isscalar(entry):
                x = float(entry)
                pieces.append((x, x))
            else:
                lo, hi = entry
                pieces.append((float(lo), float(hi)))
        for lo, hi in pieces:
            if not math.isfinite(lo):
                raise ValueError("piece lower ends must be finite")
            if hi < lo:
                raise ValueError(f"piece [{lo}, {hi}] has hi < lo")
        for (_, h1), (l2, _) in zip(pieces, pieces[1:]):
            if l2 <= h1:
                raise ValueError("pieces must be sorted ascending and disjoint")
        if any(math.isinf(hi) for _, hi in pieces[:-1]):
            raise ValueError("only the last piece may be unbounded")
        self.pieces = tuple(pieces)

    def __len__(self):
        return len(self.pieces)

    def __repr__(self):
        return f"ActionSet({list(self.pieces)!r})"

    @property
    def least(self):
        return self.pieces[0][0]

    @property
    def supremum(self):
        return self.pieces[-1][1]

    @property
    def unbounded(self):
        return math.isinf(self.pieces[-1][1])


class CostSpec:
    """Per-piece cost descriptors, aligned with the pieces of an ActionSet."""

    __slots__ = ("fns",)

    def __init__(self, fns):
        fns = tuple(fns)
        for fn in fns:
            if not isinstance(fn, COST_FAMILIES):
                raise TypeError(f"unsupported cost family: {type(fn).__name__}")
        self.fns = fns

    def __len__(self):
        return len(self.fns)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def _structural_check(action_set, cost_spec):
    """Shape-level checks that are caller errors rather than model violations."""
    if len(action_set) != len(cost_spec):
        raise ValueError(
            f"{len(action_set)} action pieces but {len(cost_spec)} cost descriptors"
        )
    for (lo, hi), fn in zip(action_set.pieces, cost_spec.fns):
        if isinstance(fn, PowerCost) and lo < fn.shift - 1e-15:
            raise ValueError("power cost shift must not exceed its piece lower end")
        if isinstance(fn, TableCost):
            if math.isinf(hi):
                raise ValueError("table cost cannot span an unbounded piece")
            if abs(fn.xs[0] - lo) > EPS_MEM or abs(fn.xs[-1] - hi) > EPS_MEM:
                raise ValueError("table cost knots must span exactly its piece")


def check_assumptions(action_set, cost_spec):
    """Return the list of violated standing assumptions (empty when valid)."""
    _structural_check(action_set, cost_spec)
    violations = []
    if len(action_set) == 0:
        return [Violation("EmptyActionSet", "action set has no pieces")]

    theta_star = action_set.least
    c0 = float(cost_spec.fns[0].value_scalar(theta_star))
    if abs(c0) > EPS_VAL:
        violations.append(Violation(
            "NotNormalized",
            f"cost at the least action is {c0:.3g}, expected 0",
        ))

    prev_hi_val = None
    for idx, ((lo, hi), fn) in enumerate(zip(action_set.pieces, cost_spec.fns)):
        # within-piece monotonicity
        if isinstance(fn, LinearCost) and fn.slope < 0.0:
            violations.append(Violation(
                "NotNondecreasing", f"piece {idx}: negative linear slope"))
        elif isinstance(fn, PowerCost) and fn.coeff < 0.0:
            violations.append(Violation(
                "NotNondecreasing", f"piece {idx}: negative power coefficient"))
        elif isinstance(fn, TableCost):
            if any(b < a - EPS_VAL for a, b in zip(fn.cs, fn.cs[1:])):
                violations.append(Violation(
                    "NotNondecreasing", f"piece {idx}: table values decrease"))
        # across pieces
        lo_val = float(fn.value_scalar(lo))
        if prev_hi_val is not None and lo_val < prev_hi_val - EPS_VAL:
            violations.append(Violation(
                "NotNondecreasing",
                f"cost drops from {prev_hi_val:.3g} to {lo_val:.3g} entering piece {idx}",
            ))
        prev_hi_val = float(fn.value_scalar(hi)) if math.isfinite(hi) else _INF

        # strict positivity away from the least action
        if lo > theta_star and lo_val <= EPS_VAL and not violations_has(violations, "NotNormalized"):
            violations.append(Violation(
                "NotPositive",
                f"cost is {lo_val:.3g} at action {lo:.3g} > least action",
            ))
        if lo == theta_star and hi > lo:
            flat = (
                (isinstance(fn, LinearCost) and fn.slope == 0.0)
                or (isinstance(fn, PowerCost) and fn.coeff == 0.0)
            )
            if flat:
                violations.append(Violation(
                    "NotPositive", "cost vanishes on an interval above the least action"))
            if isinstance(fn, TableCost) and any(
                x > theta_star and c <= 0.0 for x, c in zip(fn.xs, fn.cs)
            ):
                violations.append(Violation(
                    "NotPositive", "table cost is nonpositive above the least action"))

    # superlinear growth on an unbounded action set
    if action_set.unbounded:
        tail = cost_spec.fns[-1]
        if isinstance(tail, LinearCost):
            violations.append(Violation(
                "GrowthConditionViolated",
                "linear tail: cost(x)/x stays bounded, superlinear growth required "
                "for an unbounded action set",
            ))
        elif isinstance(tail, PowerCost) and tail.exponent <= 1.0:
            violations.append(Violation(
                "GrowthConditionViolated",
                f"power tail with exponent {tail.exponent:g} <= 1 is not superlinear",
            ))
        elif isinstance(tail, TableCost):
            violations.append(Violation(
                "GrowthConditionViolated",
                "tabulated tail cannot certify superlinear growth",
            ))
    return violations


def violations_has(violations, kind):
    return any(v.kind == kind for v in violations)


def validate(action_set, cost_spec):
    """Check all standing assumptions and build the conjugate machinery.

    Raises ModelValidationError (carrying every violation) on failure.
    """
    violations = check_assumptions(action_set, cost_spec)
    if violations:
        raise ModelValidationError(violations)
    theta_star = action_set.least
    theta_max = None if action_set.unbounded else action_set.supremum
    conj = _build_conjugate(action_set, cost_spec, theta_star)
    return ValidatedModel(action_set, cost_spec, theta_star, theta_max, conj)


# ---------------------------------------------------------------------------
# conjugate pair: breakpoints of best_action and derived thresholds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConjugatePair:
    """Piecewise structure of the smallest-maximizer map.

    breakpoints: sorted positive marginal values where best_action jumps or
        changes analytic form.  Quadratures split panels here.
    segments: (y_lo, y_hi, piece_index) windows, for reporting.
    least_action_threshold: largest y at which the least action is still
        optimal (inf for a one-point action set).
    descent_end: sup of the y-range where best_action <= 0, i.e. where the
        hamiltonian is still descending (0 when the least action is > 0,
        inf when every action is <= 0).
    """

    breakpoints: np.ndarray
    segments: tuple
    least_action_threshold: float
    descent_end: float


def _piece_best_scalar(piece, fn, y):
    """max over one piece of y*x - cost(x), evaluated in pure floats."""
    lo, hi = piece
    best = y * lo - fn.value_scalar(lo)
    if hi > lo:
        if math.isfinite(hi):
            g = y * hi - fn.value_scalar(hi)
            if g > best:
                best = g
        if isinstance(fn, PowerCost) and fn.exponent > 1.0 and fn.coeff > 0.0:
            xs = min(max(fn.stationary_scalar(y), lo), hi)
            g = y * xs - fn.value_scalar(xs)
            if g > best:
                best = g
        elif isinstance(fn, ExponentialCost):
            xs = min(max(fn.stationary_scalar(y), lo), hi)
            g = y * xs - fn.value_scalar(xs)
            if g > best:
                best = g
        elif isinstance(fn, TableCost):
            for xk, ck in zip(fn.xs, fn.cs):
                g = y * xk - ck
                if g > best:
                    best = g
    return best


def _piece_internal_breaks(piece, fn):
    """Marginal values where this piece's own smallest maximizer moves."""
    lo, hi = piece
    if hi == lo:
        return []
    if isinstance(fn, LinearCost):
        return [fn.slope]
    if isinstance(fn, PowerCost):
        if fn.coeff == 0.0:
            return [0.0]
        if fn.exponent == 1.0:
            return [fn.coeff]
        if fn.exponent > 1.0:
            out = [fn.slope_at(lo)]
            if math.isfinite(hi):
                out.append(fn.slope_at(hi))
            return out
        # concave piece: the maximizer hops between the endpoints at the chord
        chord = (fn.value_scalar(hi) - fn.value_scalar(lo)) / (hi - lo)
        return [chord]
    if isinstance(fn, ExponentialCost):
        out = [fn.slope_at(lo)]
        if math.isfinite(hi):
            out.append(fn.slope_at(hi))
        return out
    # table: only knots on the lower convex hull are ever maximizers, and
    # the active knot advances at the hull chord slopes
    hull = _lower_hull(fn.xs, fn.cs)
    return [
        (c2 - c1) / (x2 - x1)
        for (x1, c1), (x2, c2) in zip(hull, hull[1:])
    ]


def _lower_hull(xs, cs):
    """Lower convex hull of the knot cloud, as a list of (x, c) vertices."""
    pts = []
    for x, c in zip(xs, cs):
        while len(pts) >= 2:
            (x1, c1), (x2, c2) = pts[-2], pts[-1]
            if (c2 - c1) * (x - x2) >= (c - c2) * (x2 - x1):
                pts.pop()
            else:
                break
        pts.append((float(x), float(c)))
    return pts


def _switch_slope(piece_i, fn_i, piece_j, fn_j):
    """Unique y where piece j overtakes piece i in the value envelope.

    The difference of the two per-piece value functions is strictly
    increasing because piece j lies strictly to the right of piece i, so a
    bracketed root either exists and is unique or the switch is at y = 0.
    """
    def diff(y):
        return (_piece_best_scalar(piece_j, fn_j, y)
                - _piece_best_scalar(piece_i, fn_i, y))

    if diff(0.0) >= 0.0:
        return 0.0
    hi = 1.0
    while diff(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e300:
            raise RuntimeError("switch slope search diverged")
    return float(brentq(diff, 0.0, hi, xtol=1e-300, rtol=1e-15, maxiter=256))


def _build_conjugate(action_set, cost_spec, theta_star):
    pieces = action_set.pieces
    fns = cost_spec.fns

    # envelope of per-piece value functions: active piece index is
    # nondecreasing in y, so a convex-hull-trick stack suffices
    active = [(0, 0.0)]
    for j in range(1, len(pieces)):
        y_sw = 0.0
        while active:
            i, start_i = active[-1]
            y_sw = _switch_slope(pieces[i], fns[i], pieces[j], fns[j])
            if y_sw <= start_i * (1.0 + 1e-15) and len(active) > 1:
                active.pop()
                continue
            break
        active.append((j, max(y_sw, active[-1][1] if active else 0.0)))

    switch_ys = [start for _, start in active[1:]]

    # collect internal breakpoints, restricted to each piece's active window
    breaks = list(switch_ys)
    windows = []
    for k, (idx, start) in enumerate(active):
        end = active[k + 1][1] if k + 1 < len(active) else _INF
        windows.append((start, end, idx))
        for y in _piece_internal_breaks(pieces[idx], fns[idx]):
            if start < y < end or (k == 0 and 0.0 < y < end):
                breaks.append(y)

    breaks = sorted(b for b in breaks if b > 0.0 and math.isfinite(b))
    deduped = []
    for b in breaks:
        if not deduped or b - deduped[-1] > 1e-12 * max(1.0, abs(b)):
            deduped.append(b)
    breakpoints = np.asarray(deduped, dtype=float)

    # largest marginal value at which the least action is still optimal
    first_piece, first_fn = pieces[0], fns[0]
    departures = []
    if first_piece[1] > first_piece[0]:
        internal = _piece_internal_breaks(first_piece, first_fn)
        if internal:
            departures.append(min(internal))
    if switch_ys:
        departures.append(switch_ys[0])
    least_threshold = min(departures) if departures else _INF
    least_threshold = max(least_threshold, 0.0)

    conj = ConjugatePair(breakpoints, tuple(windows), least_threshold, 0.0)
    descent = _descent_end(action_set, conj, theta_star,
                           lambda y: _envelope_action(pieces, fns, y))
    return ConjugatePair(breakpoints, tuple(windows), least_threshold, descent)


def _scalar_transform(pieces, fns, y):
    """(value, smallest maximizer) over all pieces in pure floats."""
    cands = []
    gmax = -_INF
    for piece, fn in zip(pieces, fns):
        for x, g in _scalar_candidates(piece, fn, y):
            cands.append((x, g))
            if g > gmax:
                gmax = g
    tol = EPS_TIE * max(1.0, abs(gmax))
    best_x = min(x for x, g in cands if g >= gmax - tol)
    return gmax, best_x


def _envelope_action(pieces, fns, y):
    """Scalar smallest maximizer across all pieces (construction-time use)."""
    return _scalar_transform(pieces, fns, y)[1]


def _scalar_candidates(piece, fn, y):
    lo, hi = piece
    yield lo, y * lo - fn.value_scalar(lo)
    if hi > lo:
        if math.isfinite(hi):
            yield hi, y * hi - fn.value_scalar(hi)
        if isinstance(fn, PowerCost) and fn.exponent > 1.0 and fn.coeff > 0.0:
            xs = min(max(fn.stationary_scalar(y), lo), hi)
            yield xs, y * xs - fn.value_scalar(xs)
        elif isinstance(fn, ExponentialCost):
            xs = min(max(fn.stationary_scalar(y), lo), hi)
            yield xs, y * xs - fn.value_scalar(xs)
        elif isinstance(fn, TableCost):
            for xk, ck in zip(fn.xs, fn.cs):
                yield xk, y * xk - ck


def _descent_end(action_set, conj, theta_star, act):
    """sup { y : best_action(y) <= 0 }, by breakpoint scan plus bisection."""
    if theta_star > 0.0:
        return 0.0
    if theta_star == 0.0:
        return conj.least_action_threshold
    if action_set.supremum <= 0.0:
        return _INF
    hi = 1.0
    while act(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e300:
            return _INF
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if act(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    # snap to a breakpoint when the crossing is a jump
    for b in conj.breakpoints:
        if abs(b - lo) <= 1e-9 * max(1.0, abs(b)):
            return float(b)
    return lo


# ---------------------------------------------------------------------------
# validated model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValidatedModel:
    """A cost model that passed validation, with its conjugate structure."""

    action_set: ActionSet
    cost_spec: CostSpec
    theta_star: float
    theta_max: float | None   # None when the action set is unbounded
    conjugate: ConjugatePair

    # -- membership and cost -------------------------------------------------

    def contains(self, x):
        """Membership in the action set within tolerance; scalar or array."""
        x = np.asarray(x, dtype=float)
        mask = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.action_set.pieces:
            mask |= (x >= lo - EPS_MEM) & (x <= hi + EPS_MEM)
        return bool(mask) if mask.ndim == 0 else mask

    def cost(self, x):
        """Cost rate at action x; raises NotInActionSet off the set."""
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.full(x.shape, np.nan)
        matched = np.zeros(x.shape, dtype=bool)
        for (lo, hi), fn in zip(self.action_set.pieces, self.cost_spec.fns):
            m = (x >= lo - EPS_MEM) & (x <= hi + EPS_MEM) & ~matched
            if np.any(m):
                xc = np.clip(x[m], lo, hi if math.isfinite(hi) else np.inf)
                out[m] = fn.value(xc)
                matched |= m
        if not np.all(matched):
            bad = x[~matched]
            raise NotInActionSet(f"actions not in the action set: {bad[:5]}")
        return float(out[0]) if scalar else out

    # -- conjugate pair ------------------------------------------------------

    def hamiltonian(self, y):
        """sup over actions of y*x - cost(x); convex, zero at y = 0."""
        if np.ndim(y) == 0:
            self._check_nonneg(float(y))
            g, _ = self._transform_scalar(float(y))
            return g
        y = np.asarray(y, dtype=float)
        self._check_nonneg(float(y.min(initial=0.0)))
        g, _ = self._transform_array(y)
        return g

    def best_action(self, y):
        """Smallest maximizer of y*x - cost(x); nondecreasing, left-continuous."""
        if np.ndim(y) == 0:
            self._check_nonneg(float(y))
            _, x = self._transform_scalar(float(y))
            return x
        y = np.asarray(y, dtype=float)
        self._check_nonneg(float(y.min(initial=0.0)))
        _, x = self._transform_array(y)
        return x

    def hamiltonian_dip(self, p):
        """Depth of the hamiltonian's minimum over [0, p] (nonnegative).

        Since the hamiltonian is convex with slope best_action, the minimum
        sits at min(p, descent_end).
        """
        if p <= 0.0:
            raise ValueError("penalty rate must be positive")
        ym = min(p, self.conjugate.descent_end)
        return max(0.0, -float(self.hamiltonian(ym)))

    def least_action_threshold(self):
        """Largest marginal value at which the least action is still optimal."""
        return self.conjugate.least_action_threshold

    # -- hull ------------------------------------------------------------------

    def convex_hull(self):
        """Model with the greatest convex minorant of the cost.

        Only defined for knot-based costs (points, linear pieces, tables);
        smooth families raise ValueError.  The hull model keeps the same
        smallest-maximizer map.
        """
        knots = []
        for (lo, hi), fn in zip(self.action_set.pieces, self.cost_spec.fns):
            if isinstance(fn, TableCost):
                knots.extend(zip(fn.xs, fn.cs))
            elif isinstance(fn, LinearCost):
                knots.append((lo, fn.value_scalar(lo)))
                if hi > lo:
                    if math.isinf(hi):
                        raise ValueError("hull undefined for an unbounded linear piece")
                    knots.append((hi, fn.value_scalar(hi)))
            else:
                raise ValueError("convex hull helper supports knot-based costs only")
        knots.sort()
        hull = _lower_hull([x for x, _ in knots], [c for _, c in knots])
        if len(hull) == 1:
            (x0, c0), = hull
            return validate(ActionSet([x0]), CostSpec([LinearCost(0.0, c0)]))
        xs = [x for x, _ in hull]
        cs = [c for _, c in hull]
        return validate(ActionSet([(xs[0], xs[-1])]), CostSpec([TableCost(xs, cs)]))

    # -- internals -------------------------------------------------------------

    @staticmethod
    def _check_nonneg(y):
        if y < 0.0:
            raise ValueError("marginal value must be nonnegative")

    def _transform_scalar(self, y):
        return _scalar_transform(self.action_set.pieces, self.cost_spec.fns, y)

    def _transform_array(self, y):
        shape = y.shape
        yflat = y.ravel()
        xs_list, gs_list = [], []
        for (lo, hi), fn in zip(self.action_set.pieces, self.cost_spec.fns):
            xs_list.append(np.full(yflat.shape, lo))
            gs_list.append(yflat * lo - float(fn.value_scalar(lo)))
            if hi > lo:
                if math.isfinite(hi):
                    xs_list.append(np.full(yflat.shape, hi))
                    gs_list.append(yflat * hi - float(fn.value_scalar(hi)))
                if isinstance(fn, PowerCost) and fn.exponent > 1.0 and fn.coeff > 0.0:
                    xcand = np.clip(fn.stationary(yflat), lo, hi)
                    xs_list.append(xcand)
                    gs_list.append(yflat * xcand - fn.value(xcand))
                elif isinstance(fn, ExponentialCost):
                    xcand = np.clip(fn.stationary(yflat), lo, hi)
                    xs_list.append(xcand)
                    gs_list.append(yflat * xcand - fn.value(xcand))
                elif isinstance(fn, TableCost):
                    for xk, ck in zip(fn.xs, fn.cs):
                        xs_list.append(np.full(yflat.shape, xk))
                        gs_list.append(yflat * xk - ck)
        X = np.vstack(xs_list)
        G = np.vstack(gs_list)
        G = np.where(np.isnan(G), -_INF, G)
        gmax = G.max(axis=0)
        tol = EPS_TIE * np.maximum(1.0, np.abs(gmax))
        act = np.where(G >= gmax - tol, X, _INF).min(axis=0)
        return gmax.reshape(shape), act.reshape(shape)
