import math

import pytest

from driftctrl import (ActionSet, CostSpec, ExponentialCost, LinearCost,
                       ProblemParams, validate)


@pytest.fixture(scope="session")
def exp_model():
    """Energy-style cost exp(x) - 1 on the unbounded action set [0, inf)."""
    return validate(ActionSet([(0.0, math.inf)]),
                    CostSpec([ExponentialCost(1.0, 0.0)]))


@pytest.fixture(scope="session")
def singleton0():
    return validate(ActionSet([0.0]), CostSpec([LinearCost(0.0, 0.0)]))


@pytest.fixture(scope="session")
def singleton1():
    return validate(ActionSet([1.0]), CostSpec([LinearCost(0.0, 0.0)]))


@pytest.fixture(scope="session")
def two_point():
    """A = {0, 1} with cost 0.5 at the upper action."""
    return validate(ActionSet([0.0, 1.0]),
                    CostSpec([LinearCost(0.0, 0.0), LinearCost(0.0, 0.5)]))


@pytest.fixture(scope="session")
def bounded_interval():
    """A = [1, 2] with exponential cost anchored at the least action."""
    return validate(ActionSet([(1.0, 2.0)]),
                    CostSpec([ExponentialCost(1.0, 1.0)]))


@pytest.fixture(scope="session")
def unit_params():
    return ProblemParams(1.0, 1.0, 2.0)
