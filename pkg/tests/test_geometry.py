import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errbound.common import InvalidInputError
from errbound.geometry import (
    NormSpec,
    Polyhedron,
    dual_norming_functional,
    min_norm_point,
    norm,
    project_polyhedron,
)

vec2 = st.lists(st.floats(-50, 50, allow_nan=False), min_size=2, max_size=2)


def test_norms_and_duals():
    v = [3.0, -4.0]
    assert norm(v) == 5.0
    assert norm(v, NormSpec("sup")) == 4.0
    assert norm(v, NormSpec("one")) == 7.0
    assert NormSpec("sup").dual == NormSpec("one")
    with pytest.raises(InvalidInputError):
        NormSpec("two")


@pytest.mark.parametrize("kind", ["euclidean", "sup", "one"])
@settings(max_examples=60, deadline=None)
@given(h=vec2)
def test_norming_functional(kind, h):
    spec = NormSpec(kind)
    if norm(h, spec) < 1e-6:
        return
    hs = dual_norming_functional(h, spec)
    assert abs(spec.dual_norm(hs) - 1.0) <= 1e-12
    assert abs(hs @ np.array(h) - norm(h, spec)) <= 1e-9 * (1 + norm(h, spec))


def test_norming_functional_sup_tie_goes_first():
    assert list(dual_norming_functional([2.0, -2.0], NormSpec("sup"))) == [1.0, 0.0]


def test_min_norm_known_cases():
    r = min_norm_point([(1, 1), (-2, 1)])
    assert np.allclose(r.point, [0, 1]) and abs(r.distance - 1) < 1e-12
    r = min_norm_point([(-2, 1), (1, -2)])
    assert abs(r.distance - 2**-0.5) < 1e-12
    assert min_norm_point([(1, 1), (-1, -1)]).distance < 1e-12
    assert abs(min_norm_point([(3, 4)]).distance - 5) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_min_norm_optimality(seed):
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((int(rng.integers(1, 7)), int(rng.integers(2, 4)))) + rng.standard_normal(1)
    r = min_norm_point(P)
    assert abs(r.coefficients.sum() - 1) < 1e-9 and np.all(r.coefficients >= -1e-12)
    assert np.allclose(r.coefficients @ P, r.point)
    # Wolfe criterion: <p, q> >= |q|^2 for every input point p
    assert np.all(P @ r.point >= r.distance**2 - 1e-8 * (1 + np.abs(P).max() ** 2))


def test_projection_examples():
    H = Polyhedron([[1, 1]], [0])
    assert abs(project_polyhedron([1, 1], H).distance - math.sqrt(2)) < 1e-12
    assert project_polyhedron([-1, -1], H).distance == 0.0
    eps = 0.1
    P = Polyhedron([[1, 1 + eps], [-1, -1 + eps]], [0, 0])
    assert abs(project_polyhedron([-eps, eps], P).distance - math.sqrt(2) * eps) < 1e-10


def test_projection_empty():
    r = project_polyhedron([0, 0], Polyhedron([[1, 0], [-1, 0]], [-1, -1]))
    assert r.empty and r.distance == math.inf


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), vec2)
def test_projection_is_feasible_and_optimal(seed, x):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 6))
    P = Polyhedron(rng.standard_normal((m, 2)), rng.uniform(0.1, 2, m))
    r = project_polyhedron(x, P)
    assert P.violation(r.point) <= 1e-8 * (1 + np.abs(x).max())
    # no sampled feasible point is closer
    Y = rng.uniform(-60, 60, (2000, 2))
    Y = Y[np.all(Y @ P.A.T <= P.b, axis=1)]
    if len(Y):
        assert r.distance <= np.min(np.linalg.norm(Y - np.array(x), axis=1)) + 1e-9
