import numpy as np
import pytest

from errbound.convex_model import MaxAffineSystem

SQRT2 = 2.0**0.5


def ex1_system():
    return MaxAffineSystem.from_rows([("1", (1, 1), 1), ("2", (-2, 1), 2), ("3", (1, -2), 2)])


def ex2_system():
    return MaxAffineSystem.from_rows([("1", (1, 1), 0), ("2", (-1, -1), 0)])


def halfspace_system():
    return MaxAffineSystem.from_rows([("1", (3, 4), 0)])


def random_system(seed, max_rows=5, dim=2):
    """Seeded system with 2..max_rows rows and b > 0, so the origin is interior."""
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, max_rows + 1))
    A = rng.standard_normal((m, dim))
    b = rng.uniform(0.5, 2.0, m)
    return MaxAffineSystem(tuple(str(i + 1) for i in range(m)), A, b)


@pytest.fixture
def ex1():
    return ex1_system()


@pytest.fixture
def ex2():
    return ex2_system()


@pytest.fixture
def halfspace():
    return halfspace_system()
