"""Phi(x) = inf over unit h of d+f(x, h).

For a max-affine f and the Euclidean norm, d+f(x, .) is the support function
of the active gradients A, and min over the sphere of max_a <a, h> is
    -dist(0, conv A)        when 0 is not in conv A   (min-norm point),
    >= 0                    otherwise                 (angular sweep in R^2).
Everything else goes through sampled sphere searches and is flagged
uncertified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .common import InvalidInputError
from .convex_model import ConvexFunction, _active_mask, active_set, as_function, ordered
from .geometry import EUCLIDEAN, NormSpec, _norm_rows, as_vec, min_norm_point

MULTISTART = 32
GRID_FALLBACK = 4096


@dataclass(frozen=True)
class SphereMinResult:
    value: float
    argmin_h: np.ndarray
    method: str  # "exact-minnorm" | "angular-sweep" | "grid" | "multistart"
    certified: bool
    active: tuple[str, ...] = ()


def _zero_threshold(A: np.ndarray) -> float:
    return 1e-9 * (1.0 + float(np.max(np.linalg.norm(A, axis=1))))


def _angular_sweep(A: np.ndarray) -> tuple[float, np.ndarray]:
    """Exact min over the unit circle of max_i <a_i, h>.

    On each arc where one row is maximal the objective is a sinusoid, so the
    minimum sits at a breakpoint <a_i - a_j, h> = 0 or at some -a_i/|a_i|.
    """
    cands = []
    k = A.shape[0]
    for i in range(k):
        for j in range(i + 1, k):
            d = A[i] - A[j]
            nd = math.hypot(d[0], d[1])
            if nd > 0.0:
                perp = np.array([-d[1], d[0]]) / nd
                cands.append(perp)
                cands.append(-perp)
    for i in range(k):
        na = math.hypot(A[i, 0], A[i, 1])
        if na > 0.0:
            cands.append(-A[i] / na)
    if not cands:
        return 0.0, np.array([1.0, 0.0])
    H = np.array(cands)
    vals = np.max(H @ A.T, axis=1)
    best = int(np.argmin(vals))
    return float(vals[best]), H[best]


def _sphere_search(objective, dim: int, norm: NormSpec, seed: int, starts=(), grid: int = GRID_FALLBACK):
    """Seeded grid + projected-subgradient multistart on the norm's unit sphere.

    ``objective(H)`` returns (values, subgradients) for a batch of rows H.
    Returns (value, h).
    """
    rng = np.random.default_rng(seed)
    H = norm.sample_sphere(rng, grid, dim)
    if len(starts):
        S = np.atleast_2d(np.asarray(starts, dtype=float))
        H = np.vstack([S / _norm_rows(S, norm)[:, None], H])
    vals, _ = objective(H)
    order = np.argsort(vals, kind="stable")
    best_v, best_h = float(vals[order[0]]), H[order[0]].copy()
    # refine the MULTISTART best grid points
    for idx in order[:MULTISTART]:
        h = H[idx].copy()
        step = 0.1
        for _ in range(200):
            v, g = objective(h[None, :])
            v, g = float(v[0]), g[0]
            if v < best_v:
                best_v, best_h = v, h.copy()
            tangent = g - (g @ h) * h if norm.kind == "euclidean" else g
            nt = np.linalg.norm(tangent)
            if nt == 0.0:
                break
            trial = h - step * tangent / nt
            trial /= _norm_rows(trial[None, :], norm)[0]
            tv, _ = objective(trial[None, :])
            if tv[0] < v:
                h = trial
            else:
                step *= 0.5
                if step < 1e-12:
                    break
    return best_v, best_h


def _set_objective(A: np.ndarray):
    def obj(H):
        M = H @ A.T
        i = np.argmax(M, axis=1)
        return M[np.arange(H.shape[0]), i], A[i]

    return obj


def sphere_min_over_set(A, norm: NormSpec = EUCLIDEAN, seed: int = 0) -> SphereMinResult:
    """min over ||h|| = 1 of max_{a in A} <a, h>."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        raise InvalidInputError("sphere_min_over_set needs a nonempty set")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("non-finite gradient")
    n = A.shape[1]
    if n == 1:
        # the unit sphere of R is {+1, -1} in every norm
        up, down = float(A[:, 0].max()), float((-A[:, 0]).max())
        if up <= down:
            return SphereMinResult(up, np.array([1.0]), "grid", True)
        return SphereMinResult(down, np.array([-1.0]), "grid", True)

    if norm.kind != "euclidean":
        v, h = _sphere_search(_set_objective(A), n, norm, seed)
        return SphereMinResult(v, h, "grid", False)

    mn = min_norm_point(A)
    if mn.distance > _zero_threshold(A):
        return SphereMinResult(-mn.distance, -mn.point / mn.distance, "exact-minnorm", True)
    if n == 2:
        v, h = _angular_sweep(A)
        return SphereMinResult(v, h, "angular-sweep", True)
    starts = [-a for a in A if np.any(a)]
    v, h = _sphere_search(_set_objective(A), n, norm, seed, starts=starts)
    # 0 in conv A bounds the value below by 0, so a witness at 0 closes the gap
    certified = abs(v) <= _zero_threshold(A)
    return SphereMinResult(v, h, "multistart", certified)


def zero_band(f, x, res: SphereMinResult | None = None) -> float:
    """Half-width of the band |Phi| <= band treated as Phi = 0:
    1e-7 * (1 + size of the directional derivatives at x)."""
    f = as_function(f)
    x = as_vec(x, f.dim)
    if f.system is not None:
        mask = _active_mask(f.system, x, None)
        scale = float(np.max(np.linalg.norm(f.system.A[mask], axis=1)))
    elif f.dim == 1:
        scale = max(abs(f.dirderiv(x, [1.0])), abs(f.dirderiv(x, [-1.0])))
    else:
        scale = abs(res.value) if res is not None else 0.0
    return 1e-7 * (1.0 + scale)


def phi(f, x, seed: int = 0) -> SphereMinResult:
    """Phi(x) = inf over unit h of d+f(x, h), with its minimizing direction."""
    f = as_function(f)
    x = as_vec(x, f.dim)
    fx = f(x)
    if not math.isfinite(fx):
        raise InvalidInputError("phi needs f(x) finite")
    if f.system is not None:
        sys = f.system
        J = ordered(sys, active_set(sys, x))
        res = sphere_min_over_set(sys.rows_for(J), sys.norm, seed)
        return SphereMinResult(res.value, res.argmin_h, res.method, res.certified, J)
    if f.dim == 1:
        up, down = f.dirderiv(x, [1.0]), f.dirderiv(x, [-1.0])
        exact = f.has_exact_dirderiv
        if up <= down:
            return SphereMinResult(up, np.array([1.0]), "grid", exact)
        return SphereMinResult(down, np.array([-1.0]), "grid", exact)
    v, h = _black_box_search(f, x, seed)
    return SphereMinResult(v, h, "multistart", False)


def _black_box_search(f: ConvexFunction, x: np.ndarray, seed: int):
    rng = np.random.default_rng(seed)
    H = f.norm.sample_sphere(rng, 512, f.dim)
    vals = np.array([f.dirderiv(x, h) for h in H])
    order = np.argsort(vals, kind="stable")
    best_v, best_h = float(vals[order[0]]), H[order[0]].copy()
    for idx in order[:8]:
        h = H[idx].copy()
        v = float(vals[idx])
        step = 0.2
        while step > 1e-6:
            improved = False
            for _ in range(2 * f.dim):
                trial = h + step * rng.standard_normal(f.dim)
                trial /= f.norm(trial)
                tv = f.dirderiv(x, trial)
                if tv < v:
                    h, v, improved = trial, tv, True
            if not improved:
                step *= 0.5
        if v < best_v:
            best_v, best_h = v, h
    return best_v, best_h


def phi_grid_oracle(f, x, resolution: int = 10_000, seed: int = 0) -> SphereMinResult:
    """Brute-force min of d+f(x, .) over a deterministic sphere mesh.

    dim 1: both unit vectors; dim 2: ``resolution`` equally spaced angles;
    dim 3: a (polar, azimuth) lattice with about ``resolution`` nodes;
    otherwise ``resolution`` seeded uniform sphere samples.
    """
    f = as_function(f)
    x = as_vec(x, f.dim)
    H = sphere_mesh(f.dim, resolution, seed)
    H = H / _norm_rows(H, f.norm)[:, None]
    if f.system is not None:
        mask = _active_mask(f.system, x, None)
        vals = np.max(H @ f.system.A[mask].T, axis=1)
    else:
        vals = np.array([f.dirderiv(x, h) for h in H])
    best = int(np.argmin(vals))
    return SphereMinResult(float(vals[best]), H[best], "grid", False)


def sphere_mesh(dim: int, resolution: int, seed: int = 0) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        th = 2.0 * np.pi * np.arange(resolution) / resolution
        return np.column_stack([np.cos(th), np.sin(th)])
    if dim == 3:
        n_pol = max(2, int(round(math.sqrt(resolution / 2.0))))
        n_az = max(4, int(round(resolution / n_pol)))
        pol = np.pi * (np.arange(n_pol) + 0.5) / n_pol
        az = 2.0 * np.pi * np.arange(n_az) / n_az
        P, Z = np.meshgrid(pol, az, indexing="ij")
        pts = np.column_stack([(np.sin(P) * np.cos(Z)).ravel(), (np.sin(P) * np.sin(Z)).ravel(), np.cos(P).ravel()])
        return np.vstack([pts, [[0, 0, 1.0], [0, 0, -1.0]]])
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((resolution, dim))
    return g / np.linalg.norm(g, axis=1)[:, None]
