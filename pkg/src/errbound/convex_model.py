"""Convex functions handled by the package: finite max-affine systems, their
tilts, named one-dimensional functions and user-supplied callables."""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy.optimize import brentq

from .common import InconclusiveError, InvalidInputError, NotApplicableError
from .geometry import EUCLIDEAN, NormSpec, Polyhedron, as_vec, project_polyhedron

ACTIVE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MaxAffineSystem:
    """f(x) = max_t (<a_t, x> - b_t) over a finite labelled index set T.

    Its lower level set is the polyhedron {x : <a_t, x> <= b_t for all t}.
    """

    labels: tuple[str, ...]
    A: np.ndarray
    b: np.ndarray
    norm: NormSpec = EUCLIDEAN
    origin: object = field(default=None, repr=False)  # TiltSpec when built by a tilt

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        labels = tuple(str(s) for s in self.labels)
        if A.shape[0] == 0:
            raise InvalidInputError("a max-affine system needs at least one row")
        if A.shape[0] != b.size or len(labels) != b.size:
            raise InvalidInputError("rows, offsets and labels must have equal length")
        if len(set(labels)) != len(labels):
            raise InvalidInputError("row labels must be unique")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InvalidInputError("system data must be finite")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_rows(cls, rows: Iterable, norm: NormSpec = EUCLIDEAN) -> MaxAffineSystem:
        rows = list(rows)
        if not rows:
            raise InvalidInputError("a max-affine system needs at least one row")
        labels = [r[0] for r in rows]
        A = np.array([as_vec(r[1]) for r in rows]) if len({len(r[1]) for r in rows}) == 1 else None
        if A is None:
            raise InvalidInputError("all rows must share one dimension")
        return cls(tuple(labels), A, np.array([float(r[2]) for r in rows]), norm)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def __len__(self) -> int:
        return self.A.shape[0]

    @property
    def polyhedron(self) -> Polyhedron:
        return Polyhedron(self.A, self.b)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise InvalidInputError(f"unknown row label {label!r}") from None

    def rows_for(self, labels: Iterable[str]) -> np.ndarray:
        return self.A[[self.index(t) for t in labels]]

    def shifted(self, u, eps: float, anchor, origin=None) -> MaxAffineSystem:
        """Rows (a_t + eps*u, b_t + eps*<u, anchor>): the system of
        f + eps*<u, . - anchor>."""
        u = as_vec(u, self.dim)
        anchor = as_vec(anchor, self.dim)
        return MaxAffineSystem(
            self.labels, self.A + eps * u, self.b + eps * float(u @ anchor), self.norm, origin
        )

    def as_function(self) -> ConvexFunction:
        return ConvexFunction(
            value_fn=lambda x: evaluate(self, x),
            dim=self.dim,
            kind="max-affine",
            name="max-affine",
            dirderiv_fn=lambda x, h: dirderiv_exact(self, x, h),
            system=self,
            norm=self.norm,
        )

    def __call__(self, x) -> float:
        return evaluate(self, x)


def evaluate(sys: MaxAffineSystem, x) -> float:
    x = as_vec(x, sys.dim)
    return float(np.max(sys.A @ x - sys.b))


def _active_mask(sys: MaxAffineSystem, x: np.ndarray, tol: float | None) -> np.ndarray:
    vals = sys.A @ x - sys.b
    fx = float(vals.max())
    slack = ACTIVE_TOL * (1.0 + abs(fx)) if tol is None else tol
    return vals >= fx - slack


def active_set(sys: MaxAffineSystem, x, tol: float | None = None) -> frozenset[str]:
    """Labels attaining the max at x; default slack 1e-9*(1 + |f(x)|)."""
    x = as_vec(x, sys.dim)
    mask = _active_mask(sys, x, tol)
    return frozenset(t for t, m in zip(sys.labels, mask) if m)


def ordered(sys: MaxAffineSystem, labels: Iterable[str]) -> tuple[str, ...]:
    """Labels in row order (for deterministic printing)."""
    labels = set(labels)
    return tuple(t for t in sys.labels if t in labels)


def dirderiv_exact(sys: MaxAffineSystem, x, h, tol: float | None = None) -> float:
    """d+f(x, h) = max over active rows of <a_t, h>."""
    x = as_vec(x, sys.dim)
    h = as_vec(h, sys.dim)
    mask = _active_mask(sys, x, tol)
    return float(np.max(sys.A[mask] @ h))


# ---------------------------------------------------------------------------
# generic convex functions


@dataclass(frozen=True, eq=False)
class ConvexFunction:
    value_fn: Callable[[np.ndarray], float]
    dim: int
    kind: str  # "max-affine" | "tilt" | "named-1d" | "user"
    name: str = "f"
    dirderiv_fn: Callable[[np.ndarray, np.ndarray], float] | None = None
    system: MaxAffineSystem | None = None
    norm: NormSpec = EUCLIDEAN
    distance_fn: Callable[[np.ndarray], float] | None = None
    base: ConvexFunction | None = field(default=None, repr=False)
    tilt: object = field(default=None, repr=False)

    def __call__(self, x) -> float:
        try:
            v = float(self.value_fn(as_vec(x, self.dim)))
        except OverflowError:
            return math.inf
        if math.isnan(v):
            raise InvalidInputError(f"{self.name} returned NaN")
        return v

    @property
    def has_exact_dirderiv(self) -> bool:
        return self.dirderiv_fn is not None

    def dirderiv(self, x, h) -> float:
        x = as_vec(x, self.dim)
        h = as_vec(h, self.dim)
        if self.dirderiv_fn is not None:
            return float(self.dirderiv_fn(x, h))
        return dirderiv_numeric(self, x, h)


def as_function(f) -> ConvexFunction:
    if isinstance(f, ConvexFunction):
        return f
    if isinstance(f, MaxAffineSystem):
        return f.as_function()
    raise InvalidInputError(f"not a convex function: {type(f).__name__}")


def _exp_minus_one_dd(x, h):
    return math.exp(x[0]) * h[0]


def _abs_dd(x, h):
    if x[0] > 0:
        return h[0]
    if x[0] < 0:
        return -h[0]
    return abs(h[0])


_NAMED: dict[str, tuple[Callable, Callable | None]] = {
    "exp_minus_one": (lambda x: math.expm1(x[0]), _exp_minus_one_dd),
    "zero": (lambda x: 0.0, lambda x, h: 0.0),
    "abs": (lambda x: abs(x[0]), _abs_dd),
}


def register_function(
    name: str,
    value: Callable[[float], float],
    dirderiv: Callable[[float, float], float] | None = None,
    check_seed: int = 0,
) -> None:
    """Register a convex function of one real variable under ``name``.

    ``value`` and ``dirderiv`` take plain floats. The function must pass a
    seeded midpoint-convexity test.
    """
    f = ConvexFunction(lambda x: value(float(x[0])), 1, "named-1d", name)
    bad = midpoint_violation(f, seed=check_seed)
    if bad is not None:
        raise InvalidInputError(f"{name} fails the midpoint convexity test at {bad}")
    dd = None if dirderiv is None else (lambda x, h: dirderiv(float(x[0]), float(h[0])))
    _NAMED[name] = (lambda x: value(float(x[0])), dd)


def named_function(name: str) -> ConvexFunction:
    try:
        value, dd = _NAMED[name]
    except KeyError:
        raise InvalidInputError(f"unknown function {name!r}; known: {sorted(_NAMED)}") from None
    return ConvexFunction(value, 1, "named-1d", name, dd)


def named_functions() -> list[str]:
    return sorted(_NAMED)


def user_function(
    value: Callable[[np.ndarray], float],
    dim: int,
    name: str = "user",
    dirderiv: Callable | None = None,
    distance: Callable | None = None,
    norm: NormSpec = EUCLIDEAN,
    check_seed: int = 0,
) -> ConvexFunction:
    """Wrap a user callable after a seeded midpoint-convexity test."""
    f = ConvexFunction(value, dim, "user", name, dirderiv, None, norm, distance)
    bad = midpoint_violation(f, seed=check_seed)
    if bad is not None:
        raise InvalidInputError(f"{name} fails the midpoint convexity test at {bad}")
    return f


def midpoint_violation(f: ConvexFunction, seed: int = 0, count: int = 200, radius: float = 10.0, slack: float = 1e-9):
    """First sampled pair (x, y) with f((x+y)/2) > (f(x)+f(y))/2 + slack, or None."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        x = rng.uniform(-radius, radius, f.dim)
        y = rng.uniform(-radius, radius, f.dim)
        fx, fy = f(x), f(y)
        if not (math.isfinite(fx) and math.isfinite(fy)):
            continue
        if f(0.5 * (x + y)) > 0.5 * (fx + fy) + slack * (1.0 + abs(fx) + abs(fy)):
            return (x, y)
    return None


# ---------------------------------------------------------------------------
# numeric directional derivative


def difference_quotients(f, x, h, ts) -> np.ndarray:
    """(f(x + t h) - f(x)) / t for each t (nondecreasing in t for convex f)."""
    f = as_function(f)
    x = as_vec(x, f.dim)
    h = as_vec(h, f.dim)
    fx = f(x)
    return np.array([(f(x + t * h) - fx) / t for t in ts])


def dirderiv_numeric(
    f,
    x,
    h,
    t0: float = 1.0,
    gamma: float = 0.5,
    tol: float = 1e-9,
    kmax: int = 60,
) -> float:
    """d+f(x, h) from difference quotients along t_k = t0 * gamma**k.

    Quotients are nonincreasing as t decreases, so each one is an upper
    bound. Linear Richardson extrapolation removes the O(t) term of smooth
    pieces; the returned value is the extrapolated limit clipped to the
    smallest quotient seen. Stops once successive extrapolations agree to
    tol * (1 + |value|).
    """
    f = as_function(f)
    x = as_vec(x, f.dim)
    h = as_vec(h, f.dim)
    fx = f(x)
    if not math.isfinite(fx):
        raise InvalidInputError("dirderiv_numeric needs f(x) finite")
    if not np.any(h):
        return 0.0
    quotients: list[float] = []
    extrap: list[float] = []
    t = t0
    any_finite = False
    for _ in range(kmax):
        ft = f(x + t * h)
        if math.isfinite(ft):
            any_finite = True
            q = (ft - fx) / t
            if quotients:
                extrap.append((q - gamma * quotients[-1]) / (1.0 - gamma))
            quotients.append(q)
            if len(extrap) >= 2 and abs(extrap[-1] - extrap[-2]) <= tol * (1.0 + abs(extrap[-1])):
                return min(extrap[-1], min(quotients))
        elif any_finite:
            # convex f finite at x and at a larger step is finite in between
            raise InvalidInputError("f is +inf between two finite points; not convex")
        t *= gamma
    if not any_finite:
        return math.inf
    raise InconclusiveError(
        f"difference quotients did not stabilize in {kmax} steps",
        estimate=min(quotients) if quotients else None,
    )


# ---------------------------------------------------------------------------
# lower level sets


_INTERVALS: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def level_interval(f: ConvexFunction, reach: float = 1e8) -> tuple[float, float] | None:
    """S_f = {x : f(x) <= 0} for a function of one variable, as (lo, hi).

    Endpoints beyond ``reach`` are reported as -inf / +inf. None when no
    probe point is feasible (S_f treated as empty).
    """
    if f.dim != 1:
        raise InvalidInputError("level_interval is for functions of one variable")
    key = (reach,)
    cached = _INTERVALS.get(f, {})
    if key in cached:
        return cached[key]
    result = _level_interval(f, reach)
    _INTERVALS.setdefault(f, {})[key] = result
    return result


def _level_interval(f: ConvexFunction, reach: float) -> tuple[float, float] | None:
    val = lambda s: f(np.array([s]))  # noqa: E731
    probes = [0.0] + [s * 10.0**k for k in range(-6, 9) for s in (1.0, -1.0)]
    x0 = next((p for p in probes if val(p) <= 0.0), None)
    if x0 is None:
        return None

    def edge(direction: float) -> float:
        step = 1e-6
        inner = x0
        while step <= reach:
            outer = x0 + direction * step
            if val(outer) > 0.0:
                if val(inner) == 0.0:
                    return inner
                return brentq(val, inner, outer, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
            inner = outer
            step *= 2.0
        return direction * math.inf

    return edge(-1.0), edge(1.0)


def distance_to_level_set(f, x) -> float:
    """d(x, S_f); +inf when S_f is empty."""
    f = as_function(f)
    x = as_vec(x, f.dim)
    if f.system is not None:
        return project_polyhedron(x, f.system.polyhedron).distance
    if f.distance_fn is not None:
        return float(f.distance_fn(x))
    if f.dim == 1:
        iv = level_interval(f)
        if iv is None:
            return math.inf
        lo, hi = iv
        return float(max(lo - x[0], x[0] - hi, 0.0))
    raise NotApplicableError(f"no distance evaluator for {f.name}")


def boundary_points(f) -> list[np.ndarray]:
    """Finite boundary points of S_f for a function of one variable."""
    f = as_function(f)
    iv = level_interval(f)
    if iv is None:
        return []
    pts = sorted({v for v in iv if math.isfinite(v)})
    return [np.array([v]) for v in pts]
