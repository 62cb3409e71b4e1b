"""Global and local error-bound moduli, estimated two ways on shared samples:
the residual/distance ratio f(x)/d(x, S_f) and the primal value -Phi(x)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .common import UNBOUNDED, InvalidInputError, NotApplicableError, Unbounded
from .convex_model import ConvexFunction, as_function, distance_to_level_set
from .geometry import Polyhedron, as_vec, project_polyhedron, sample_ball
from .sphere_min import phi, zero_band

ZERO_LEVEL_TOL = 1e-9


@dataclass(frozen=True)
class SamplerSpec:
    """Seeded sampler: ``count`` uniform points in each nested ball of radius
    ``radii[k]`` around ``center`` (origin by default).

    For max-affine functions every point is also snapped onto the tie set of
    its two largest rows, so points where two rows are simultaneously active
    (where Phi takes its smaller values) are represented. ``extra`` points are
    always included, in the first shell.
    """

    seed: int = 0
    count: int = 1000
    radii: tuple[float, ...] = (1.0, 10.0, 100.0)
    center: tuple[float, ...] | None = None
    ridge_snap: bool = True
    extra: tuple = ()

    def __post_init__(self):
        if self.count < 0 or not self.radii or any(r <= 0 for r in self.radii):
            raise InvalidInputError("sampler needs count >= 0 and positive radii")


def _ridge_snap(f: ConvexFunction, X: np.ndarray) -> np.ndarray:
    sys = f.system
    if sys is None or len(sys) < 2 or X.size == 0:
        return np.zeros((0, f.dim))
    V = X @ sys.A.T - sys.b
    top = np.argsort(-V, axis=1, kind="stable")[:, :2]
    i, j = top[:, 0], top[:, 1]
    D = sys.A[i] - sys.A[j]
    rhs = sys.b[i] - sys.b[j]
    dd = np.sum(D * D, axis=1)
    ok = dd > 0
    step = np.where(ok, (np.sum(D * X, axis=1) - rhs) / np.where(ok, dd, 1.0), 0.0)
    return (X - step[:, None] * D)[ok]


def sample_shells(f, sampler: SamplerSpec) -> list[tuple[float, np.ndarray]]:
    """[(radius, points)] for each shell, deterministic in ``sampler.seed``."""
    f = as_function(f)
    rng = np.random.default_rng(sampler.seed)
    center = np.zeros(f.dim) if sampler.center is None else as_vec(sampler.center, f.dim)
    shells = []
    for k, r in enumerate(sampler.radii):
        X = sample_ball(rng, sampler.count, f.dim, r, center)
        if sampler.ridge_snap:
            X = np.vstack([X, _ridge_snap(f, X)])
        if k == 0 and len(sampler.extra):
            X = np.vstack([np.atleast_2d(np.asarray(sampler.extra, dtype=float)), X])
        shells.append((float(r), X))
    return shells


@dataclass(frozen=True)
class PointData:
    """Per-sample values on the infeasible part of a sample set."""

    points: np.ndarray
    values: np.ndarray
    distances: np.ndarray
    phis: np.ndarray
    certified: np.ndarray

    @property
    def ratios(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.where(np.isinf(self.distances), 0.0, self.values / self.distances)


def evaluate_points(f, X: np.ndarray, distance: Callable | None = None, with_phi: bool = True, with_distance: bool = True) -> PointData:
    f = as_function(f)
    vals = np.array([f(x) for x in X]) if len(X) else np.zeros(0)
    keep = vals > 0.0
    P, vals = X[keep], vals[keep]
    dist_fn = distance or (lambda x: distance_to_level_set(f, x))
    dists = np.array([dist_fn(x) for x in P]) if with_distance else np.full(len(P), np.nan)
    if with_phi:
        res = [phi(f, x) for x in P]
        phis = np.array([r.value for r in res])
        cert = np.array([r.certified for r in res], dtype=bool)
    else:
        phis = np.full(len(P), np.nan)
        cert = np.zeros(len(P), dtype=bool)
    return PointData(P, vals, dists, phis, cert)


@dataclass(frozen=True)
class ModulusEstimate:
    kind: str  # "global" | "local"
    value: float | Unbounded
    route: str  # "direct-ratio" | "primal-phi"
    sample_count: int
    region: tuple[float, ...]
    witness: np.ndarray | None
    per_region: tuple = ()  # cumulative infimum after each radius
    certified: bool = True
    stabilized: bool = True
    notes: tuple[str, ...] = field(default=())


def _distance_from(S, f: ConvexFunction):
    if S is None:
        return None
    if isinstance(S, Polyhedron):
        return lambda x: project_polyhedron(x, S).distance
    if callable(S):
        return S
    raise InvalidInputError("S must be a Polyhedron, a distance callable or None")


def _stabilized(per_region: list) -> bool:
    finite = [v for v in per_region if v is not UNBOUNDED]
    if len(finite) < 2:
        return len(finite) == len(per_region)
    a, b = finite[-2], finite[-1]
    return abs(a - b) <= 1e-2 * max(abs(a), abs(b), 1e-300)


def _global_estimate(f, sampler, route: str, S=None) -> ModulusEstimate:
    f = as_function(f)
    distance = _distance_from(S, f)
    best, witness = UNBOUNDED, None
    per_region = []
    total = 0
    certified = True
    notes = []
    anomalies = 0
    for r, X in sample_shells(f, sampler):
        data = evaluate_points(f, X, distance, with_phi=route == "primal-phi", with_distance=route == "direct-ratio")
        total += len(data.values)
        if len(data.values):
            if route == "direct-ratio":
                if np.any(np.isinf(data.distances)):
                    notes.append("lower level set is empty; d = +inf gives modulus 0")
                vals = data.ratios
            else:
                vals = -data.phis
                certified &= bool(np.all(data.certified))
                bad = vals < 0
                if np.any(bad):
                    anomalies += int(bad.sum())
                    vals = np.maximum(vals, 0.0)
            k = int(np.argmin(vals))
            if best is UNBOUNDED or vals[k] < best:
                best, witness = float(vals[k]), data.points[k]
        per_region.append(best)
    if anomalies:
        notes.append(f"{anomalies} infeasible samples with Phi > 0 clamped to 0")
    if route == "primal-phi" and not certified:
        notes.append("estimate: some Phi values are uncertified")
    return ModulusEstimate(
        "global",
        best,
        route,
        total,
        tuple(float(r) for r in sampler.radii),
        witness,
        tuple(per_region),
        certified,
        _stabilized(per_region),
        tuple(dict.fromkeys(notes)),
    )


def global_modulus_direct(f, S=None, sampler: SamplerSpec = SamplerSpec()) -> ModulusEstimate:
    """inf over sampled x with f(x) > 0 of f(x) / d(x, S_f).

    ``S`` overrides the distance evaluator (a Polyhedron or a callable);
    by default it is derived from f.
    """
    return _global_estimate(f, sampler, "direct-ratio", S)


def global_modulus_primal(f, sampler: SamplerSpec = SamplerSpec()) -> ModulusEstimate:
    """inf over sampled x with f(x) > 0 of -Phi(x)."""
    return _global_estimate(f, sampler, "primal-phi")


@dataclass(frozen=True)
class LocalModulus:
    anchor: np.ndarray
    direct: ModulusEstimate
    primal: ModulusEstimate

    @property
    def gap(self) -> float:
        a, b = self.direct.value, self.primal.value
        if a is UNBOUNDED or b is UNBOUNDED:
            return 0.0 if a is b else math.inf
        return abs(a - b)


def local_modulus(
    f,
    anchor,
    radii: tuple[float, ...] = (1e-1, 1e-2, 1e-3),
    samples: int = 200,
    seed: int = 0,
) -> LocalModulus:
    """Liminf of f(x)/d(x, S_f) and of -Phi(x) as x -> anchor with f(x) > 0,
    approximated by infima over shrinking balls. The reported value is the
    infimum over the smallest ball that contains infeasible samples."""
    f = as_function(f)
    anchor = as_vec(anchor, f.dim)
    if abs(f(anchor)) > ZERO_LEVEL_TOL:
        raise InvalidInputError(f"anchor is not on the zero level: f = {f(anchor):.3e}")
    radii = tuple(sorted((float(r) for r in radii), reverse=True))
    rng = np.random.default_rng(seed)
    direct_inf, primal_inf = [], []
    dw = pw = None
    total = 0
    certified = True
    for r in radii:
        X = sample_ball(rng, samples, f.dim, r, anchor)
        if f.system is not None:
            snapped = _ridge_snap(f, X)
            inside = np.linalg.norm(snapped - anchor, axis=1) <= r
            X = np.vstack([X, snapped[inside]])
        data = evaluate_points(f, X)
        total += len(data.values)
        if len(data.values) == 0:
            direct_inf.append(UNBOUNDED)
            primal_inf.append(UNBOUNDED)
            continue
        ratios, prim = data.ratios, -data.phis
        certified &= bool(np.all(data.certified))
        i, j = int(np.argmin(ratios)), int(np.argmin(prim))
        direct_inf.append(float(ratios[i]))
        primal_inf.append(float(prim[j]))
        dw, pw = data.points[i], data.points[j]

    def pick(infs):
        finite = [v for v in infs if v is not UNBOUNDED]
        return finite[-1] if finite else UNBOUNDED

    def est(route, infs, w, cert):
        return ModulusEstimate("local", pick(infs), route, total, radii, w, tuple(infs), cert, _stabilized(infs))

    return LocalModulus(anchor, est("direct-ratio", direct_inf, dw, True), est("primal-phi", primal_inf, pw, certified))


def modulus_lower_bound_point(f, anchor) -> float:
    """|Phi(anchor)|, a lower bound on the local modulus when Phi != 0."""
    f = as_function(f)
    anchor = as_vec(anchor, f.dim)
    if abs(f(anchor)) > ZERO_LEVEL_TOL:
        raise InvalidInputError("anchor is not on the zero level")
    res = phi(f, anchor)
    if abs(res.value) <= zero_band(f, anchor, res):
        raise NotApplicableError("Phi(anchor) = 0; no lower bound from the directional derivative")
    return abs(res.value)
