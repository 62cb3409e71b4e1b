"""Stability of error bounds under small convex perturbations.

Point verdicts come from the sign of Phi at the anchor. Global checks look at
|Phi| over the boundary of the lower level set and over interior points that
approach the boundary at vanishing slope. Linear tilts f + eps*<u, . - x0>
are the perturbation family; the destabilizers build the tilt that drives
the modulus down to a small multiple of eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .common import InconclusiveError, InvalidInputError, NotApplicableError
from .convex_model import (
    ConvexFunction,
    MaxAffineSystem,
    active_set,
    as_function,
    boundary_points,
)
from .geometry import EUCLIDEAN, NormSpec, as_vec, dual_norming_functional
from .hoffman import ActiveSetCatalog, enumerate_active_sets
from .moduli import SamplerSpec
from .sphere_min import phi, zero_band

ZERO_LEVEL_TOL = 1e-9
SLOPE_TIERS = (1e-1, 1e-2, 1e-3, 1e-4)
PAIR_STEPS = tuple(10.0 ** (k / 4.0) for k in range(-16, 25))  # 1e-4 .. 1e6


@dataclass(frozen=True)
class TiltSpec:
    """g(x) = f(x) + magnitude * <direction, x - anchor>."""

    anchor: np.ndarray
    direction: np.ndarray
    magnitude: float
    norm: NormSpec = EUCLIDEAN

    def __post_init__(self):
        anchor = as_vec(self.anchor)
        u = as_vec(self.direction, anchor.size)
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "direction", u)
        eps = float(self.magnitude)
        if not math.isfinite(eps) or eps < 0:
            raise InvalidInputError("tilt magnitude must be finite and >= 0")
        object.__setattr__(self, "magnitude", eps)
        if self.norm.dual_norm(u) > 1.0 + 1e-12:
            raise InvalidInputError("tilt direction must lie in the dual unit ball")

    @property
    def lip(self) -> float:
        """Lipschitz constant of the added linear term."""
        return self.magnitude * self.norm.dual_norm(self.direction)


def tilt(f, spec: TiltSpec):
    """f + eps*<u, . - anchor>; max-affine input stays a MaxAffineSystem."""
    if isinstance(f, MaxAffineSystem):
        sys = f
    else:
        f = as_function(f)
        sys = f.system
    if sys is not None:
        spec = _renorm(spec, sys.norm)
        return sys.shifted(spec.direction, spec.magnitude, spec.anchor, origin=spec)
    spec = _renorm(spec, f.norm)
    if spec.anchor.size != f.dim:
        raise InvalidInputError("tilt anchor has the wrong dimension")
    u, eps, x0 = spec.direction, spec.magnitude, spec.anchor

    def value(x):
        return f(x) + eps * float(u @ (x - x0))

    dd = None
    if f.has_exact_dirderiv:
        dd = lambda x, h: f.dirderiv(x, h) + eps * float(u @ as_vec(h))  # noqa: E731
    return ConvexFunction(value, f.dim, "tilt", f"{f.name}+tilt", dd, None, f.norm, None, f, spec)


def _renorm(spec: TiltSpec, norm: NormSpec) -> TiltSpec:
    if spec.norm == norm:
        return spec
    return TiltSpec(spec.anchor, spec.direction, spec.magnitude, norm)


def _tilt_of(f, g) -> TiltSpec | None:
    """The TiltSpec turning f into g, when g was built that way."""
    if isinstance(g, MaxAffineSystem):
        spec = g.origin if isinstance(g.origin, TiltSpec) else None
        base = f if isinstance(f, MaxAffineSystem) else as_function(f).system
        if spec is None or base is None:
            return None
        t = tilt(base, spec)
        same = t.labels == g.labels and np.array_equal(t.A, g.A) and np.array_equal(t.b, g.b)
        return spec if same else None
    g = as_function(g)
    if g.kind == "tilt" and g.base is not None and g.base is as_function(f):
        return g.tilt
    return None


# ---------------------------------------------------------------------------
# certificates


class Witness(NamedTuple):
    point: np.ndarray
    phi: float
    tilt: TiltSpec | None = None


@dataclass(frozen=True)
class StabilityCertificate:
    scope: str  # "point" | "global"
    verdict: str  # "stable" | "unstable" | "inconclusive"
    tau: float
    phi_value: float  # Phi at the anchor, or min |Phi| over the boundary
    witnesses: tuple[Witness, ...] = ()
    notes: tuple[str, ...] = ()
    certified: bool = True

    def margin(self, eps: float) -> float:
        """Lower bound |Phi_g(anchor)| >= tau - eps for any tilt of magnitude eps < tau."""
        if self.verdict != "stable":
            raise NotApplicableError("no tilt margin without a stable verdict")
        if not 0.0 <= eps < self.tau:
            raise InvalidInputError(f"tilt magnitude must lie in [0, {self.tau})")
        return self.tau - eps


def _on_zero_level(f: ConvexFunction, x: np.ndarray) -> None:
    v = f(x)
    if abs(v) > ZERO_LEVEL_TOL:
        raise InvalidInputError(f"point is not on the zero level: f = {v:.3e}")


def point_stability(f, anchor, tol: float | None = None) -> StabilityCertificate:
    """Stable iff |Phi(anchor)| exceeds the zero band; unstable when a
    certified Phi sits inside the band; inconclusive otherwise."""
    f = as_function(f)
    anchor = as_vec(anchor, f.dim)
    _on_zero_level(f, anchor)
    res = phi(f, anchor)
    band = zero_band(f, anchor, res) if tol is None else float(tol)
    gamma = abs(res.value)
    w = (Witness(anchor, res.value),)
    if gamma > band:
        note = f"tilts of magnitude eps < {gamma:.17g} keep |Phi| >= {gamma:.17g} - eps at the anchor"
        return StabilityCertificate("point", "stable", gamma, res.value, w, (note,), res.certified)
    if res.certified:
        return StabilityCertificate("point", "unstable", 0.0, res.value, w, (f"|Phi| <= {band:.3g}",), True)
    return StabilityCertificate(
        "point", "inconclusive", 0.0, res.value, w, ("Phi near 0 but not certified",), False
    )


# ---------------------------------------------------------------------------
# boundary sampling


def _face_points(sys: MaxAffineSystem, catalog: ActiveSetCatalog, rng, per_face: int) -> list[tuple[np.ndarray, tuple]]:
    """Witnesses plus random points in the relative interior of each realizable face."""
    out = []
    for e in catalog.entries:
        out.append((e.witness, e.labels))
        J = [sys.index(lab) for lab in e.labels]
        rest = [t for t in range(len(sys)) if t not in J]
        _, s, Vt = np.linalg.svd(sys.A[J])
        rank = int(np.sum(s > 1e-12 * max(1.0, s.max(initial=0.0))))
        N = Vt[rank:]
        if N.shape[0] == 0:
            continue
        for _ in range(per_face):
            d = rng.standard_normal(N.shape[0]) @ N
            d /= np.linalg.norm(d)
            slack = sys.b[rest] - sys.A[rest] @ e.witness
            rate = sys.A[rest] @ d
            lim = slack[rate > 0] / rate[rate > 0]
            tmax = min(10.0, float(lim.min())) if lim.size else 10.0
            x = e.witness + rng.uniform(0.05, 0.95) * tmax * d
            if abs(sys(x)) <= ZERO_LEVEL_TOL and set(active_set(sys, x)) == set(e.labels):
                out.append((x, e.labels))
    return out


def boundary_sampler(f, seed: int = 0, per_face: int = 8, max_size: int | None = None) -> list[np.ndarray]:
    """Points of bdry(S_f), each with |f| <= 1e-9.

    Max-affine: sampled from every realizable face. One variable: the finite
    endpoints of S_f.
    """
    if isinstance(f, MaxAffineSystem) or as_function(f).system is not None:
        sys = f if isinstance(f, MaxAffineSystem) else as_function(f).system
        cat = enumerate_active_sets(sys, max_size)
        rng = np.random.default_rng(seed)
        return [x for x, _ in _face_points(sys, cat, rng, per_face)]
    f = as_function(f)
    if f.dim != 1:
        raise NotApplicableError("boundary sampling needs a max-affine system or a function of one variable")
    return [x for x in boundary_points(f) if abs(f(x)) <= ZERO_LEVEL_TOL]


def boundary_condition_3_9(f, points: Sequence | None = None, max_size: int | None = None) -> tuple[float, StabilityCertificate]:
    """inf over boundary points of |Phi|, and whether it is positive.

    For max-affine systems Phi depends only on the active set, so the
    minimum over realizable active sets is exact.
    """
    sys = f if isinstance(f, MaxAffineSystem) else as_function(f).system
    if points is None and sys is not None:
        cat = enumerate_active_sets(sys, max_size)
        if not cat.entries:
            raise NotApplicableError("the lower level set has empty boundary")
        vals = [abs(e.op.value) for e in cat.entries]
        wits = tuple(Witness(e.witness, e.op.value) for e in cat.entries)
        cert = all(e.op.certified for e in cat.entries)
        scale = float(np.max(np.linalg.norm(sys.A, axis=1)))
        return _global_cert(min(vals), wits, cert, 1e-7 * (1.0 + scale), ("exact over realizable active sets",))
    fn = as_function(f)
    pts = boundary_sampler(fn) if points is None else [as_vec(p, fn.dim) for p in points]
    for p in pts:
        _on_zero_level(fn, p)
    if not pts:
        raise NotApplicableError("the lower level set has empty boundary")
    res = [phi(fn, p) for p in pts]
    wits = tuple(Witness(p, r.value) for p, r in zip(pts, res))
    band = max(zero_band(fn, p, r) for p, r in zip(pts, res))
    note = "boundary points enumerated" if points is None and fn.dim == 1 else "sampled boundary points"
    return _global_cert(min(abs(r.value) for r in res), wits, all(r.certified for r in res), band, (note,))


def _global_cert(tau, wits, certified, band, notes):
    if tau > band:
        verdict = "stable"
    else:
        verdict = "unstable" if certified else "inconclusive"
    return tau, StabilityCertificate("global", verdict, tau if verdict == "stable" else 0.0, tau, wits, notes, certified)


# ---------------------------------------------------------------------------
# interior pairs at vanishing slope


class InteriorPair(NamedTuple):
    z: np.ndarray
    x: np.ndarray
    slope: float


def interior_pairs(f, seed: int = 0, directions: int = 16, steps=PAIR_STEPS) -> list[InteriorPair]:
    """Pairs (z, x), z = x + t*d interior (f(z) < 0), x on the boundary, with
    slope (f(z) - f(x)) / ||z - x||, over a geometric range of t."""
    fn = as_function(f)
    rng = np.random.default_rng(seed)
    bpts = boundary_sampler(fn, seed, per_face=2)
    if fn.dim == 1:
        dirs = [np.array([1.0]), np.array([-1.0])]
    else:
        dirs = list(fn.norm.sample_sphere(rng, directions, fn.dim))
    pairs = []
    for x in bpts:
        local = list(dirs)
        if fn.system is not None:
            r = phi(fn, x)
            if r.value < 0:
                local.insert(0, r.argmin_h)
        fx = fn(x)
        for d in local:
            nd = fn.norm(d)
            for t in steps:
                z = x + t * d
                fz = fn(z)
                if fz < 0.0:
                    pairs.append(InteriorPair(z, x, (fz - fx) / (t * nd)))
    return pairs


@dataclass(frozen=True)
class InteriorCheck:
    holds: bool
    tau: float
    label: str
    tiers: tuple  # (slope tier, min |Phi(z)| or None, witness pair or None)
    witness: InteriorPair | None = None
    notes: tuple[str, ...] = field(default=())


def interior_condition_3_20(f, tau: float, seed: int = 0, tiers=SLOPE_TIERS) -> InteriorCheck:
    """For interior points approaching the boundary at slope below each tier,
    does |Phi(z)| stay >= tau - 1e-6?  A refutation comes with a witness pair;
    a pass is sampled support only."""
    fn = as_function(f)
    label = "sampled necessary check"
    pairs = interior_pairs(fn, seed)
    if not pairs:
        return InteriorCheck(True, tau, label, tuple((s, None, None) for s in tiers), None, ("vacuous: no interior pairs",))
    absphi = [abs(phi(fn, p.z).value) for p in pairs]
    rows = []
    worst = None
    for s in sorted(tiers, reverse=True):
        idx = [i for i, p in enumerate(pairs) if abs(p.slope) <= s]
        if not idx:
            rows.append((s, None, None))
            continue
        k = min(idx, key=lambda i: absphi[i])
        rows.append((s, absphi[k], pairs[k]))
        if absphi[k] < tau - 1e-6 and worst is None:
            worst = pairs[k]
    holds = worst is None
    notes = () if any(r[1] is not None for r in rows) else ("no pair reached the first slope tier",)
    return InteriorCheck(holds, tau, label, tuple(rows), worst, notes)


# ---------------------------------------------------------------------------
# destabilizers


@dataclass(frozen=True)
class Destabilizer:
    g: object  # MaxAffineSystem | ConvexFunction
    witness: np.ndarray
    phi_g: float
    bound: float  # 5*eps (point case) or 2*eps (sequence case)
    case: str
    tilt: TiltSpec


def destabilizer_search(
    f,
    eps: float,
    anchor=None,
    pairs: Sequence[InteriorPair] | None = None,
    tol: float = 1e-9,
    max_steps: int = 200,
    seed: int = 0,
) -> Destabilizer:
    """A tilt g of f and a point z with g(z) > 0 and small -Phi_g(z).

    With ``anchor`` (where Phi = 0): tilt along the norming functional of a
    flat direction h and walk from the anchor along h; target 5*eps.
    Otherwise: interior pairs (z, x) with |Phi(z)| < eps, tilted by the
    norming functional of z - x around x; target 2*eps.
    """
    fn = as_function(f)
    if not eps > 0:
        raise InvalidInputError("eps must be positive")
    if anchor is not None:
        return _point_destabilizer(f, fn, as_vec(anchor, fn.dim), eps, tol, max_steps)
    return _sequence_destabilizer(f, fn, eps, pairs, tol, seed)


def _point_destabilizer(f, fn, anchor, eps, tol, max_steps):
    _on_zero_level(fn, anchor)
    res = phi(fn, anchor)
    if abs(res.value) > zero_band(fn, anchor, res):
        raise NotApplicableError(f"Phi(anchor) = {res.value:.6g}: no flat direction, the anchor is stable")
    h = res.argmin_h / fn.norm(res.argmin_h)
    spec = TiltSpec(anchor, dual_norming_functional(h, fn.norm), eps, fn.norm)
    g = tilt(f, spec)
    gf = as_function(g)
    bound = 5.0 * eps
    t = 1e-6 * (1.0 + fn.norm(anchor))
    best = None
    for _ in range(max_steps):
        z = anchor + t * h
        if gf(z) > 0.0:
            v = phi(gf, z).value
            if -v <= bound + tol:
                return Destabilizer(g, z, v, bound, "point", spec)
            if best is None or -v < -best[1]:
                best = (z, v)
        t *= 2.0
        if not math.isfinite(t):
            break
    raise InconclusiveError(
        "no witness with g > 0 and -Phi_g <= 5 eps along the flat direction",
        estimate=None if best is None else -best[1],
    )


def _sequence_destabilizer(f, fn, eps, pairs, tol, seed):
    if pairs is None:
        pairs = interior_pairs(fn, seed)
    bound = 2.0 * eps
    best = None
    for p in pairs:
        if fn.norm(p.z - p.x) == 0.0 or abs(phi(fn, p.z).value) >= eps:
            continue
        spec = TiltSpec(p.x, dual_norming_functional(p.z - p.x, fn.norm), eps, fn.norm)
        g = tilt(f, spec)
        gf = as_function(g)
        if gf(p.z) <= 0.0:
            continue
        v = phi(gf, p.z).value
        if best is None or -v < -best.phi_g:
            best = Destabilizer(g, p.z, v, bound, "sequence", spec)
    if best is None:
        raise NotApplicableError("no interior pair with |Phi(z)| < eps and a positive tilt at z")
    if -best.phi_g > bound + tol:
        raise InconclusiveError("best sequence witness exceeds 2 eps", estimate=-best.phi_g)
    return best


# ---------------------------------------------------------------------------
# perturbation checks


def _sphere_points(fn: ConvexFunction, center, radius, count, rng):
    S = fn.norm.sample_sphere(rng, count, fn.dim) if fn.dim > 1 else np.array([[1.0], [-1.0]])
    return center + radius * S


def eps_perturbation_check(
    f, g, anchor, eps: float, radii: Sequence[float] = (1e-2, 1e-3, 1e-4), samples: int = 64, seed: int = 0
) -> bool:
    """Sampled test of limsup_{x -> anchor} |D(x) - D(anchor)| / ||x - anchor|| <= eps,
    D = f - g. Necessary-condition check, not a proof."""
    fn, gn = as_function(f), as_function(g)
    anchor = as_vec(anchor, fn.dim)
    if not (math.isfinite(fn(anchor)) and math.isfinite(gn(anchor))):
        raise InvalidInputError("f and g must be finite at the anchor")
    spec = _tilt_of(f, g)
    if spec is not None and spec.lip > eps + 1e-12:
        return False
    d0 = fn(anchor) - gn(anchor)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for r in sorted(radii, reverse=True)[-2:]:
        for x in _sphere_points(fn, anchor, r, samples, rng):
            q = abs(fn(x) - gn(x) - d0) / fn.norm(x - anchor)
            worst = max(worst, q)
    return worst <= eps + 1e-6


class LipEstimate(NamedTuple):
    value: float
    analytic: bool  # False: sampled lower estimate


def lip_difference_estimate(f, g, sampler: SamplerSpec = SamplerSpec(count=200, radii=(10.0,))) -> LipEstimate:
    """Lipschitz constant of f - g: exact for tilts, sampled otherwise."""
    spec = _tilt_of(f, g)
    if spec is not None:
        return LipEstimate(spec.lip, True)
    fn, gn = as_function(f), as_function(g)
    rng = np.random.default_rng(sampler.seed)
    best = 0.0
    for r in sampler.radii:
        U = rng.uniform(-r, r, size=(sampler.count, fn.dim))
        V = U + rng.standard_normal((sampler.count, fn.dim)) * (r * 10.0 ** rng.uniform(-6, 0, size=(sampler.count, 1)))
        for u, v in zip(U, V):
            n = fn.norm(u - v)
            if n == 0.0:
                continue
            du, dv = fn(u) - gn(u), fn(v) - gn(v)
            if not (math.isfinite(du) and math.isfinite(dv)):
                raise InvalidInputError("f and g must be finite on the sampled pairs")
            best = max(best, abs(du - dv) / n)
    return LipEstimate(best, False)
