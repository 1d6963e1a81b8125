"""Exception types shared by the solver, the simulator, and the CLI."""

from dataclasses import dataclass


class DriftCtrlError(Exception):
    """Base class for package-specific failures."""


@dataclass(frozen=True)
class Violation:
    """One violated model assumption, reported by cost-model validation."""

    kind: str
    message: str

    def __str__(self):
        return f"{self.kind}: {self.message}"


class ModelValidationError(DriftCtrlError):
    """Raised when a cost model violates one or more standing assumptions.

    Carries the full list of violations so callers can report all of them
    at once instead of failing on the first.
    """

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class NotInActionSet(DriftCtrlError):
    """A drift value lies outside the action set (beyond membership tolerance)."""


class StateOutOfRange(DriftCtrlError):
    """A buffer state lies outside [0, b]."""


class GammaOutOfRange(DriftCtrlError):
    """Candidate average cost at or below the feasible range; the span
    integral is singular or undefined there."""


class BracketingFailed(DriftCtrlError):
    """A safeguarded root search exhausted its bracket budget.  Signals a
    model or scaling bug rather than a recoverable condition."""


class EndpointMismatch(DriftCtrlError):
    """Independent ODE integration of the marginal value disagrees with the
    table inversion at the upper boundary."""


class DualityViolation(DriftCtrlError):
    """Average cost fell below penalty * drop rate beyond tolerance, which
    is numerically inconsistent."""


class InfeasibleBudget(DriftCtrlError):
    """Drop-rate budget below what maximal drift can achieve."""


class SlackBudgetWarning(UserWarning):
    """Drop-rate budget at or above the free (least-drift) drop rate; the
    constraint is non-binding and the zero-cost policy is returned."""


class NonPositiveParameter(DriftCtrlError):
    """A parameter that must be strictly positive is not."""


class StepTooLarge(DriftCtrlError):
    """Simulation time step too coarse for the projection scheme."""


class ValidationFailed(DriftCtrlError):
    """Monte Carlo validation disagrees with the analytic solution.

    The offending statistic is described in the message; the full report
    is attached as ``.report`` when available.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ParseError(DriftCtrlError):
    """Malformed run configuration."""
