"""Drift-rate control of a reflected diffusion on a finite buffer.

Solver for the penalized average-cost control problem, the equivalent
drop-budget formulation via dualization, and a reflected-SDE Monte Carlo
engine that cross-validates every analytic output.
"""

from .bellman import (BellmanSolution, DEFAULT_NZ, MarginalValue, ProblemParams,
                      SystemParams, bellman_residual, policy, relative_value,
                      solve, solve_average_cost, solve_marginal_value,
                      span_integral)
from .constrained import ConstraintSpec, DualSolution, solve_dual, wireless_setup
from .cost_model import (ActionSet, ConjugatePair, CostSpec, ExponentialCost,
                         LinearCost, PowerCost, TableCost, ValidatedModel,
                         check_assumptions, validate)
from .errors import (BracketingFailed, DriftCtrlError, DualityViolation,
                     EndpointMismatch, GammaOutOfRange, InfeasibleBudget,
                     ModelValidationError, NonPositiveParameter, NotInActionSet,
                     ParseError, SlackBudgetWarning, StateOutOfRange,
                     StepTooLarge, ValidationFailed, Violation)
from .rejection import (RejectionReport, check_duality_gap, drop_profile,
                        drop_rate, drop_rate_bounds, drop_rate_constant_drift,
                        rejection_report)
from .simulator import (SimConfig, SimResult, ValidationReport, compare_policies,
                        dump_path, simulate, validate_solution)

__version__ = "0.1.0"
