"""Geometric kernels: norms on R^n, norming functionals, the min-norm point of
a convex hull, and Euclidean projection onto a polyhedron."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import nnls

from .common import InvalidInputError, NumericFailure
from .simplex import is_feasible

NORM_KINDS = ("euclidean", "sup", "one")
_DUAL = {"euclidean": "euclidean", "sup": "one", "one": "sup"}


def as_vec(v, dim: int | None = None) -> np.ndarray:
    """Coerce to a finite 1-D float array (optionally of a given dimension)."""
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"expected a nonempty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("vector has non-finite coordinates")
    if dim is not None and arr.size != dim:
        raise InvalidInputError(f"dimension mismatch: expected {dim}, got {arr.size}")
    return arr


@dataclass(frozen=True)
class NormSpec:
    kind: str = "euclidean"

    def __post_init__(self):
        if self.kind not in NORM_KINDS:
            raise InvalidInputError(f"unknown norm {self.kind!r}; expected one of {NORM_KINDS}")

    @property
    def dual(self) -> NormSpec:
        return NormSpec(_DUAL[self.kind])

    def __call__(self, v) -> float:
        return norm(v, self)

    def dual_norm(self, v) -> float:
        return norm(v, self.dual)

    def sample_sphere(self, rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
        """Seeded points on this norm's unit sphere (Gaussian directions, rescaled)."""
        g = rng.standard_normal((count, dim))
        return g / _norm_rows(g, self)[:, None]


EUCLIDEAN = NormSpec("euclidean")


def _norm_rows(M: np.ndarray, spec: NormSpec) -> np.ndarray:
    if spec.kind == "euclidean":
        return np.linalg.norm(M, axis=1)
    if spec.kind == "sup":
        return np.abs(M).max(axis=1)
    return np.abs(M).sum(axis=1)


def norm(v, spec: NormSpec = EUCLIDEAN) -> float:
    v = as_vec(v)
    if spec.kind == "euclidean":
        return float(np.linalg.norm(v))
    if spec.kind == "sup":
        return float(np.abs(v).max())
    return float(np.abs(v).sum())


def dual_norming_functional(h, spec: NormSpec = EUCLIDEAN) -> np.ndarray:
    """h* with dual-norm(h*) = 1 and <h*, h> = ||h||.

    Ties among max-magnitude coordinates (sup norm) go to the first one.
    """
    h = as_vec(h)
    nh = norm(h, spec)
    if nh == 0.0:
        raise InvalidInputError("norming functional of the zero vector is undefined")
    if spec.kind == "euclidean":
        return h / nh
    if spec.kind == "sup":
        out = np.zeros_like(h)
        i = int(np.argmax(np.abs(h)))
        out[i] = math.copysign(1.0, h[i])
        return out
    # one-norm: dual is sup, sign vector works; zero coordinates get +1 (any value in [-1,1])
    return np.where(h < 0, -1.0, 1.0)


# ---------------------------------------------------------------------------
# min-norm point (Wolfe)


class MinNormPoint(NamedTuple):
    point: np.ndarray
    distance: float
    coefficients: np.ndarray


def _affine_minimizer(P: np.ndarray) -> np.ndarray:
    """Weights mu (sum 1) minimizing ||P^T mu|| over the affine hull of rows of P."""
    k = P.shape[0]
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = P @ P.T
    K[:k, k] = 1.0
    K[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    mu = sol[:k]
    return mu / mu.sum()


def min_norm_point(points: Sequence, tol: float = 1e-12, max_iter: int = 1000) -> MinNormPoint:
    """Closest point of conv(points) to the origin (Euclidean), by Wolfe's
    active-set method. Coefficients are convex weights over the input points."""
    P = np.array([as_vec(p) for p in points], dtype=float)
    if P.ndim != 2 or P.shape[0] == 0:
        raise InvalidInputError("min_norm_point needs a nonempty list of vectors")
    m, n = P.shape
    scale = max(1.0, float(np.max(np.sum(P * P, axis=1))))

    start = int(np.argmin(np.sum(P * P, axis=1)))
    S = [start]
    lam = np.array([1.0])
    x = P[start].copy()

    for _ in range(max_iter):
        xx = float(x @ x)
        if xx <= tol * tol * scale:
            break
        dots = P @ x
        j = int(np.argmin(dots))
        # Wolfe's optimality test
        if dots[j] >= xx - tol * scale or j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        # minor cycle
        while True:
            mu = _affine_minimizer(P[S])
            if np.all(mu > tol):
                lam = mu
                break
            mask = mu <= tol
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.nan_to_num(np.where(mask, lam / (lam - mu), np.inf), nan=0.0, posinf=np.inf)
            theta = float(min(1.0, np.min(ratios[mask]))) if mask.any() else 1.0
            lam = lam + theta * (mu - lam)
            keep = lam > tol
            if not keep.any():
                keep[int(np.argmax(lam))] = True
            S = [s for s, k in zip(S, keep) if k]
            lam = lam[keep]
            lam = lam / lam.sum()
        x = lam @ P[S]
        if len(S) > n + 1:
            # numerically degenerate; Caratheodory says n+1 suffice
            break

    coeffs = np.zeros(m)
    coeffs[S] = lam
    point = coeffs @ P
    return MinNormPoint(point, float(np.linalg.norm(point)), coeffs)


# ---------------------------------------------------------------------------
# polyhedra and projection


@dataclass(frozen=True)
class Polyhedron:
    """{x : A x <= b}."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if A.shape[0] == 0 or A.shape[0] != b.size:
            raise InvalidInputError("polyhedron needs at least one row and matching b")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InvalidInputError("polyhedron data must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_rows(cls, rows) -> Polyhedron:
        rows = list(rows)
        if not rows:
            raise InvalidInputError("polyhedron needs at least one row")
        return cls(np.array([as_vec(a) for a, _ in rows]), np.array([float(b) for _, b in rows]))

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def violation(self, x) -> float:
        return float(np.max(self.A @ x - self.b))

    def contains(self, x, tol: float = 0.0) -> bool:
        return self.violation(x) <= tol


class Projection(NamedTuple):
    point: np.ndarray | None
    distance: float
    empty: bool
    iterations: int


def _kkt_point(x, A, b, K, tol):
    """Projection of x onto {A_K z = b_K}, returned only if it is the
    projection onto the whole polyhedron (feasible, multipliers >= 0, and
    every row carrying a multiplier tight)."""
    AK, bK = A[K], b[K]
    lam, _, rank, _ = np.linalg.lstsq(AK @ AK.T, AK @ x - bK, rcond=None)
    if rank < len(K):
        return None
    if np.any(lam < -1e-12 * max(1.0, float(np.abs(lam).max(initial=0.0)))):
        return None
    y = x - AK.T @ lam
    if np.max(A @ y - b) > tol or np.any(np.abs(AK @ y - bK) > tol):
        return None
    return y


def _kkt_polish(x, A, b, y, incr, tol, max_rows=10):
    """Try small active-set guesses around the Dykstra iterate y.

    Candidates are the rows carrying increments plus the rows nearly tight
    at y; subsets of at most dim rows are tried, smallest first. Any subset
    passing the KKT test gives the exact projection.
    """
    n = A.shape[1]
    slack = b - A @ y
    near = np.abs(slack) <= 1e-6 * (1.0 + float(np.abs(b).max()))
    C = np.flatnonzero(near | (np.linalg.norm(incr, axis=1) > 0.0))
    if C.size == 0 or C.size > max_rows:
        return None
    for size in range(1, min(n, C.size) + 1):
        for K in itertools.combinations(C.tolist(), size):
            z = _kkt_point(x, A, b, list(K), tol)
            if z is not None:
                return z
    return None


def _stationary(x, A, b, y, scale) -> bool:
    """x - y in the cone spanned by the rows tight at y (nonnegative least squares)."""
    tight = np.flatnonzero(b - A @ y <= 1e-8 * scale)
    if tight.size == 0:
        return False
    _, resid = nnls(A[tight].T, x - y)
    return resid <= 1e-7 * scale


def project_polyhedron(x, P: Polyhedron, tol: float = 1e-10, max_iter: int = 100_000) -> Projection:
    """Euclidean projection onto P by Dykstra's cyclic halfspace projections.

    The Dykstra iterate is periodically used to guess the active rows; an
    exact solve on a guess that passes the KKT test ends the iteration. An
    empty P is reported with ``empty=True`` and infinite distance (residual
    stagnation, confirmed by a phase-1 LP).
    """
    x = as_vec(x, P.dim)
    A, b = P.A, P.b
    scale = 1.0 + float(np.abs(b).max()) + float(np.abs(x).max())
    feas_tol = tol * scale
    if np.max(A @ x - b) <= feas_tol:
        return Projection(x.copy(), 0.0, False, 0)
    m = A.shape[0]
    row_sq = np.sum(A * A, axis=1)
    zero_rows = row_sq == 0.0
    if np.any(zero_rows & (b < -feas_tol)):
        return Projection(None, math.inf, True, 0)

    y = x.copy()
    incr = np.zeros_like(A)
    best_viol = math.inf
    stall = 0
    next_polish = 1
    for it in range(1, max_iter + 1):
        y_prev = y
        for i in range(m):
            if zero_rows[i]:
                continue
            z = y + incr[i]
            v = A[i] @ z - b[i]
            y = z - (v / row_sq[i]) * A[i] if v > 0 else z
            incr[i] = z - y
        viol = float(np.max(A @ y - b))
        if it >= next_polish:
            next_polish = it + max(1, it // 4)
            cand = _kkt_polish(x, A, b, y, incr, feas_tol)
            if cand is not None:
                return Projection(cand, float(np.linalg.norm(x - cand)), False, it)
        if viol <= feas_tol and np.linalg.norm(y - y_prev) <= tol * scale and _stationary(x, A, b, y, scale):
            return Projection(y, float(np.linalg.norm(x - y)), False, it)
        if viol < best_viol * (1.0 - 1e-9):
            best_viol, stall = viol, 0
        else:
            stall += 1
        if stall >= 200 and viol > feas_tol:
            feasible, _ = is_feasible(A, b)
            if not feasible:
                return Projection(None, math.inf, True, it)
            stall = 0
    raise NumericFailure(
        f"projection did not converge in {max_iter} cycles (violation {viol:.3e})", residual=viol
    )


def sample_ball(rng: np.random.Generator, count: int, dim: int, radius: float, center=None) -> np.ndarray:
    """Uniform samples in the Euclidean ball."""
    g = rng.standard_normal((count, dim))
    g /= np.linalg.norm(g, axis=1)[:, None]
    r = radius * rng.random(count) ** (1.0 / dim)
    pts = g * r[:, None]
    if center is not None:
        pts = pts + np.asarray(center, dtype=float)
    return pts
