"""Brute-force reference computations.

Deliberately dumb and slow: sphere meshes, ray casting, zoom refinement and
random probes only.
Nothing here imports the optimized kernels, so agreement between the two
is evidence rather than tautology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .common import InvalidInputError


@dataclass(frozen=True)
class OracleConfig:
    seed: int = 0
    resolution: int = 10_000  # sphere mesh nodes (dim 2 and 3)
    samples: int = 500
    radii: tuple[float, ...] = (1.0, 10.0, 100.0)
    refinements: int = 60


def _rows(P):
    if hasattr(P, "A") and hasattr(P, "b"):
        A, b = P.A, P.b
    else:
        A, b = P
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.shape[0] != b.size:
        raise InvalidInputError("rows and right-hand sides differ in count")
    return A, b


class OracleDistance(NamedTuple):
    distance: float
    confident: bool


def _ray_hits(x, H, A, b, tol=1e-12):
    """Smallest t >= 0 with x + t*h in {A y <= b} for each row h of H (inf if none)."""
    C = H @ A.T
    r = b - A @ x
    with np.errstate(divide="ignore", invalid="ignore"):
        q = r[None, :] / C
    lo = np.max(np.where(C < 0, q, 0.0), axis=1)
    lo = np.maximum(lo, 0.0)
    hi = np.min(np.where(C > 0, q, np.inf), axis=1)
    blocked = np.any((C == 0) & (r[None, :] < 0), axis=1)
    ok = (lo <= hi + tol * (1.0 + np.abs(lo))) & ~blocked
    return np.where(ok, lo, np.inf)


def brute_distance(x, P, config: OracleConfig = OracleConfig()) -> OracleDistance:
    """Distance from x to {y : A y <= b} by casting rays from x over a sphere
    mesh (exact along each ray), then zooming on the best direction."""
    A, b = _rows(P)
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if A.shape[1] != n:
        raise InvalidInputError("dimension mismatch")
    if np.all(A @ x <= b):
        return OracleDistance(0.0, True)
    rng = np.random.default_rng(config.seed)
    H = _mesh(n, config.resolution, rng)
    t = _ray_hits(x, H, A, b)
    k = int(np.argmin(t))
    best_t, best_h = float(t[k]), H[k]
    if not math.isfinite(best_t):
        return OracleDistance(math.inf, False)
    if n == 1:
        return OracleDistance(best_t, True)
    width = 4.0 * math.pi / config.resolution ** (1.0 / (n - 1))
    for _ in range(config.refinements):
        local = best_h + rng.uniform(-width, width, size=(400, n))
        local /= np.linalg.norm(local, axis=1)[:, None]
        t = _ray_hits(x, local, A, b)
        k = int(np.argmin(t))
        if t[k] < best_t:
            best_t, best_h = float(t[k]), local[k]
        else:
            width *= 0.5
        if width < 1e-14:
            break
    return OracleDistance(best_t, True)


def _unit_rows(H: np.ndarray, norm: str) -> np.ndarray:
    if norm == "euclidean":
        s = np.linalg.norm(H, axis=1)
    elif norm == "sup":
        s = np.abs(H).max(axis=1)
    elif norm == "one":
        s = np.abs(H).sum(axis=1)
    else:
        raise InvalidInputError(f"unknown norm {norm!r}")
    return H / s[:, None]


def _mesh(n: int, resolution: int, rng) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        t = np.linspace(0.0, 2.0 * np.pi, resolution, endpoint=False)
        return np.column_stack([np.cos(t), np.sin(t)])
    if n == 3:
        # Fibonacci lattice
        i = np.arange(resolution) + 0.5
        z = 1.0 - 2.0 * i / resolution
        r = np.sqrt(1.0 - z * z)
        t = np.pi * (1.0 + 5.0**0.5) * i
        return np.column_stack([r * np.cos(t), r * np.sin(t), z])
    g = rng.standard_normal((resolution, n))
    return g / np.linalg.norm(g, axis=1)[:, None]


def brute_sphere_min(A, config: OracleConfig = OracleConfig(), norm: str = "euclidean") -> float:
    """min over the unit sphere of max_a <a, h>: mesh search, then local zooms."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[1]
    rng = np.random.default_rng(config.seed)
    H = _unit_rows(_mesh(n, config.resolution, rng), norm)
    vals = np.max(H @ A.T, axis=1)
    k = int(np.argmin(vals))
    best_v, best_h = float(vals[k]), H[k]
    if n == 1:
        return best_v
    width = 4.0 * math.pi / config.resolution ** (1.0 / (n - 1))
    for _ in range(12):
        local = best_h + rng.uniform(-width, width, size=(400, n))
        local = _unit_rows(local, norm)
        v = np.max(local @ A.T, axis=1)
        k = int(np.argmin(v))
        if v[k] < best_v:
            best_v, best_h = float(v[k]), local[k]
        width *= 0.5
    return best_v


def brute_min_norm_distance(points, config: OracleConfig = OracleConfig()) -> float:
    """dist(0, conv points) = max(0, -min_h max_a <a, h>) over the Euclidean sphere."""
    return max(0.0, -brute_sphere_min(points, config))


class ProbeResult(NamedTuple):
    ok: bool
    witness: tuple | None
    kind: str | None  # "midpoint" | "lsc" | "nan"


def convexity_probe(f, config: OracleConfig = OracleConfig(), slack: float = 1e-9) -> ProbeResult:
    """Seeded midpoint-convexity and lower-semicontinuity spot checks.

    Returns the first violating triple (u, v, midpoint) or (x, nearby point, step).
    """
    n = f.dim
    rng = np.random.default_rng(config.seed)
    for r in config.radii:
        U = rng.uniform(-r, r, size=(config.samples, n))
        V = rng.uniform(-r, r, size=(config.samples, n))
        for u, v in zip(U, V):
            m = 0.5 * (u + v)
            fu, fv, fm = f(u), f(v), f(m)
            if any(math.isnan(t) for t in (fu, fv, fm)):
                return ProbeResult(False, (u, v, m), "nan")
            bound = 0.5 * (fu + fv)
            if fm > bound + slack * (1.0 + abs(bound)):
                return ProbeResult(False, (u, v, m), "midpoint")
        for x in U[: config.samples // 5]:
            fx = f(x)
            d = rng.standard_normal(n)
            d /= np.linalg.norm(d)
            drops = [fx - f(x + t * d) for t in (1e-6, 1e-8, 1e-10)]
            if all(dr > 1e-6 * (1.0 + abs(fx)) for dr in drops):
                return ProbeResult(False, (x, x + 1e-10 * d, 1e-10), "lsc")
    return ProbeResult(True, None, None)
