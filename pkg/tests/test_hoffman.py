import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SQRT2, random_system
from errbound.common import InvalidInputError
from errbound.convex_model import MaxAffineSystem, active_set
from errbound.hoffman import (
    SamplerSpec,
    enumerate_active_sets,
    hoffman_lower_bound,
    hoffman_report,
    hoffman_sampled,
    op_J,
    perturb_system,
    perturbation_sweep,
)

FAST = SamplerSpec(count=150, radii=(1.0, 10.0))


def test_ex1_catalog(ex1):
    cat = enumerate_active_sets(ex1)
    assert set(cat.sets) == {frozenset(s) for s in ({"1"}, {"2"}, {"3"}, {"1", "2"}, {"2", "3"}, {"1", "3"})}
    lb = hoffman_lower_bound(ex1)
    assert abs(lb.value - SQRT2 / 2) < 1e-12 and lb.certified and set(lb.argmin) == {"2", "3"}


def test_ex2_catalog(ex2):
    assert enumerate_active_sets(ex2).sets == [frozenset({"1", "2"})]
    assert hoffman_lower_bound(ex2).value == pytest.approx(0, abs=1e-12)


def test_single_row(halfspace):
    assert enumerate_active_sets(halfspace).sets == [frozenset({"1"})]
    assert hoffman_lower_bound(halfspace).value == pytest.approx(5)
    assert abs(hoffman_sampled(halfspace, FAST).value - 5) < 1e-6


def test_op_values(ex1, ex2):
    assert op_J(ex1, {"2", "3"}).value == pytest.approx(-SQRT2 / 2)
    assert op_J(ex1, {"1"}).value == pytest.approx(-SQRT2)
    assert op_J(ex2, {"1", "2"}).value == pytest.approx(0, abs=1e-12)
    with pytest.raises(InvalidInputError):
        op_J(ex1, {"9"})


def test_perturbation(ex1, ex2):
    p = perturb_system(ex2, [0, 0], [0, 1], 0.1)
    assert np.allclose(p.A, [[1, 1.1], [-1, -0.9]]) and np.allclose(p.b, 0)
    assert perturb_system(ex2, [0, 0], [0, 1], 0.0).A.tolist() == ex2.A.tolist()
    q = perturb_system(ex1, [0, 1], [1, 0], 0.05)
    assert np.allclose(q.A - ex1.A, [[0.05, 0]] * 3) and np.allclose(q.b, ex1.b)
    with pytest.raises(InvalidInputError):
        perturb_system(ex1, [0, 0], [1, 0], 0.1)
    with pytest.raises(InvalidInputError):
        perturb_system(ex2, [0, 0], [1, 1], 0.1)


def test_ex2_sampled_sigma_after_tilt(ex2):
    p = perturb_system(ex2, [0, 0], [0, 1], 0.1)
    assert hoffman_sampled(p, FAST).value <= 0.1


def test_sweep_identity_cell_matches_report(ex1):
    sweep = perturbation_sweep(ex1, [0.0], direction_count=1, sampler=FAST)
    base = hoffman_report(ex1, sampler=FAST)
    for c in sweep.cells:
        assert c.lower_bound == base.lower_bound and c.sigma_sampled == base.sigma_sampled


def test_sweep_ex1_stays_bounded(ex1):
    sweep = perturbation_sweep(ex1, [0.01, 0.05, 0.1], direction_count=1, sampler=FAST)
    for eps, lb, sg in sweep.summary():
        assert lb >= SQRT2 / 2 - 2 * eps
        assert sg >= lb - 1e-6


def test_sweep_threads_match(ex1, monkeypatch):
    a = perturbation_sweep(ex1, [0.05], direction_count=1, sampler=FAST)
    monkeypatch.setenv("ERRBOUND_THREADS", "4")
    b = perturbation_sweep(ex1, [0.05], direction_count=1, sampler=FAST)
    assert a.cells == b.cells


def test_degenerate_face_not_realizable():
    # two parallel copies of one halfspace: only the pair is ever active
    sys = MaxAffineSystem.from_rows([("a", (1, 0), 1), ("b", (2, 0), 2)])
    assert enumerate_active_sets(sys).sets == [frozenset({"a", "b"})]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_catalog_witnesses_are_exact(seed):
    sys = random_system(seed)
    for e in enumerate_active_sets(sys).entries:
        assert abs(sys(e.witness)) <= 1e-9
        assert active_set(sys, e.witness) == set(e.labels)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_catalog_is_complete_against_boundary_sampling(seed):
    sys = random_system(seed)
    sets = set(enumerate_active_sets(sys).sets)
    rng = np.random.default_rng(seed)
    # walk from the interior origin along 10^4 rays to the boundary
    H = rng.standard_normal((10_000, 2))
    rates = H @ sys.A.T
    with np.errstate(divide="ignore"):
        t = np.where(rates > 0, sys.b / rates, np.inf).min(axis=1)
    for h, s in zip(H, t):
        if np.isfinite(s):
            assert active_set(sys, s * h) in sets


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_sampled_sigma_dominates_bound(seed):
    sys = random_system(seed)
    rep = hoffman_report(sys, sampler=FAST)
    assert rep.sigma_sampled >= rep.lower_bound - 1e-6
