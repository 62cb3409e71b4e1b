import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ex1_system, random_system
from errbound.common import InvalidInputError, NotApplicableError
from errbound.convex_model import (
    MaxAffineSystem,
    active_set,
    difference_quotients,
    dirderiv_exact,
    dirderiv_numeric,
    distance_to_level_set,
    level_interval,
    named_function,
    register_function,
    user_function,
)

STEPS = [0.5**k for k in range(11)]


def test_system_validation():
    with pytest.raises(InvalidInputError):
        MaxAffineSystem.from_rows([])
    with pytest.raises(InvalidInputError):
        MaxAffineSystem.from_rows([("a", (1, 0), 0), ("a", (0, 1), 0)])
    with pytest.raises(InvalidInputError):
        MaxAffineSystem.from_rows([("a", (1, 0), 0), ("b", (0, 1, 2), 0)])
    with pytest.raises(InvalidInputError):
        MaxAffineSystem.from_rows([("a", (math.nan, 0), 0)])


def test_active_sets_of_ex1(ex1):
    assert active_set(ex1, [-2, -2]) == {"2", "3"}
    assert active_set(ex1, [0, 1]) == {"1"}
    assert ex1([0, 0]) == -1.0


def test_exact_directional_derivative(ex1):
    # at the vertex (-2,-2) the derivative is max over rows 2 and 3
    assert dirderiv_exact(ex1, [-2, -2], [1, 1]) == -1.0
    assert dirderiv_exact(ex1, [-2, -2], [-1, 0]) == 2.0


def test_named_functions():
    f = named_function("exp_minus_one")
    assert f([0.0]) == 0.0
    assert f.dirderiv([0.0], [-1.0]) == -1.0
    assert named_function("abs").dirderiv([0.0], [-1.0]) == 1.0
    with pytest.raises(InvalidInputError):
        named_function("nope")


def test_numeric_derivative_matches_exact():
    f = named_function("exp_minus_one")
    g = user_function(lambda x: math.expm1(x[0]), 1, "exp")
    for x in (-3.0, 0.0, 2.0):
        for h in (1.0, -1.0):
            assert abs(dirderiv_numeric(g, [x], [h]) - f.dirderiv([x], [h])) <= 1e-8 * (1 + math.exp(x))


def test_user_function_rejects_concave():
    with pytest.raises(InvalidInputError):
        user_function(lambda x: -float(x @ x), 2)
    with pytest.raises(InvalidInputError):
        register_function("neg_square", lambda s: -s * s)


def test_level_interval_of_tilt():
    g = user_function(lambda x: math.expm1(x[0]) - 0.05 * x[0], 1, "tilted")
    lo, hi = level_interval(g)
    assert abs(hi) < 1e-12
    assert abs(lo + 19.99999996) < 1e-6
    assert level_interval(named_function("exp_minus_one"))[0] == -math.inf
    assert distance_to_level_set(g, [-25.0]) == pytest.approx(25 + lo)


def test_distance_needs_an_evaluator():
    f = user_function(lambda x: float(np.abs(x).sum()) - 1, 2)
    with pytest.raises(NotApplicableError):
        distance_to_level_set(f, [3.0, 3.0])


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_quotients_are_monotone(seed):
    rng = np.random.default_rng(seed)
    sys = random_system(seed)
    x, h = rng.normal(0, 3, 2), rng.standard_normal(2)
    q = difference_quotients(sys, x, h, STEPS)
    assert np.all(np.diff(q) <= 1e-10 * (1 + np.abs(q[:-1])))
    assert q[-1] >= dirderiv_exact(sys, x, h) - 1e-10


def test_quotients_monotone_for_ex1_vertex():
    q = difference_quotients(ex1_system(), [-2, -2], [1, 0.3], STEPS)
    assert np.all(np.diff(q) <= 1e-12)
