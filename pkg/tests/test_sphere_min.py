import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SQRT2, random_system
from errbound.common import InvalidInputError
from errbound.convex_model import named_function, user_function
from errbound.geometry import NormSpec
from errbound.sphere_min import phi, phi_grid_oracle, sphere_min_over_set


def test_worked_values():
    r = sphere_min_over_set([(-2, 1), (1, -2)])
    assert r.certified and r.method == "exact-minnorm"
    assert abs(r.value + SQRT2 / 2) < 1e-12
    r = sphere_min_over_set([(1, 1), (-1, -1)])
    assert r.certified and r.method == "angular-sweep" and abs(r.value) < 1e-12
    assert abs(sphere_min_over_set([(3, 4)]).value + 5) < 1e-12


def test_positive_branch_in_the_plane():
    # 0 strictly inside the hull: the min-max is positive
    A = np.array([(1, 0), (-1, 1), (-1, -1)], dtype=float)
    r = sphere_min_over_set(A)
    grid = phi_grid_oracle(_sys_fn(A), [0, 0], resolution=20000)
    assert abs(r.value - 1 / math.sqrt(5)) < 1e-12
    assert r.value <= grid.value < r.value + 1e-4


def _sys_fn(A):
    from errbound.convex_model import MaxAffineSystem

    return MaxAffineSystem(tuple(str(i) for i in range(len(A))), A, np.zeros(len(A)))


def test_phi_at_points(ex1, ex2):
    assert abs(phi(ex1, [-2, -2]).value + SQRT2 / 2) < 1e-12
    r = phi(ex2, [0, 0])
    assert r.value == pytest.approx(0, abs=1e-12) and r.certified
    e = phi(named_function("exp_minus_one"), [0.0])
    assert e.value == -1.0 and list(e.argmin_h) == [-1.0]
    assert phi(named_function("zero"), [0.0]).value == 0.0


def test_black_box_is_uncertified():
    f = user_function(lambda x: float(np.linalg.norm(x)), 2)
    r = phi(f, [1.0, 1.0])
    assert not r.certified and abs(r.value + 1) < 1e-3


def test_empty_set_rejected():
    with pytest.raises(InvalidInputError):
        sphere_min_over_set(np.zeros((0, 2)))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_kernel_matches_grid(seed):
    sys = random_system(seed, max_rows=4)
    A = sys.A
    k = sphere_min_over_set(A)
    H = np.column_stack([np.cos(t := np.linspace(0, 2 * np.pi, 20000, endpoint=False)), np.sin(t)])
    g = float(np.min(np.max(H @ A.T, axis=1)))
    assert k.value <= g + 1e-12
    assert g - k.value <= 1e-3 * (1 + np.abs(A).max())


@pytest.mark.parametrize("kind", ["sup", "one"])
def test_other_norms_are_flagged(kind):
    r = sphere_min_over_set([(3, 4)], NormSpec(kind))
    assert not r.certified
    expected = -4.0 if kind == "one" else -7.0  # -dual norm of (3,4)
    assert abs(r.value - expected) < 1e-3


def test_three_dimensional_branches():
    A = np.eye(3)
    r = sphere_min_over_set(A)
    assert r.certified and abs(r.value + 1 / math.sqrt(3)) < 1e-12
    A = np.vstack([np.eye(3), -np.ones(3)])
    r = sphere_min_over_set(A)
    assert r.method == "multistart" and r.value > 0
