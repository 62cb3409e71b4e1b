"""Hoffman constants of finite linear inequality systems <a_t, x> <= b_t.

The realizable active sets J(x) at zero-level points are enumerated with a
margin LP; each one gives a min-max problem over the unit sphere whose
smallest absolute value bounds the Hoffman constant from below. A sampled
residual/distance ratio bounds it from above.
"""

from __future__ import annotations

import itertools
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .common import UNBOUNDED, InvalidInputError, Unbounded
from .convex_model import MaxAffineSystem, evaluate, ordered
from .geometry import as_vec
from .moduli import SamplerSpec, global_modulus_direct
from .simplex import solve_lp
from .sphere_min import SphereMinResult, sphere_min_over_set

MARGIN_TOL = 1e-9
BOX = 1e6
MAX_ROWS = 20


@dataclass(frozen=True)
class CatalogEntry:
    labels: tuple[str, ...]
    witness: np.ndarray
    margin: float
    op: SphereMinResult
    box_active: bool = False


@dataclass(frozen=True)
class ActiveSetCatalog:
    entries: tuple[CatalogEntry, ...]
    max_size_searched: int
    notes: tuple[str, ...] = ()

    @property
    def sets(self) -> list[frozenset[str]]:
        return [frozenset(e.labels) for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def _margin_lp(sys: MaxAffineSystem, J: Sequence[int], box: float):
    """max s  s.t.  <a_t,x> = b_t (t in J),  <a_t,x> + s <= b_t (t not in J),
    |x_i| <= box, 0 <= s <= 1.  Variables (x+, x-, s) >= 0."""
    n = sys.dim
    m = len(sys)
    out = [t for t in range(m) if t not in J]
    A, b = sys.A, sys.b
    A_eq = np.hstack([A[J], -A[J], np.zeros((len(J), 1))])
    rows = [np.hstack([A[out], -A[out], np.ones((len(out), 1))])] if out else []
    rows.append(np.hstack([np.eye(2 * n), np.zeros((2 * n, 1))]))
    rows.append(np.concatenate([np.zeros(2 * n), [1.0]])[None, :])
    A_ub = np.vstack(rows)
    b_ub = np.concatenate([b[out], np.full(2 * n, box), [1.0]])
    c = np.zeros(2 * n + 1)
    c[-1] = 1.0
    res = solve_lp(c, A_ub, b_ub, A_eq, b[J])
    if res.status != "optimal":
        return None
    s_star = res.x[-1]
    if s_star <= MARGIN_TOL:
        return s_star, None
    # second pass: a small witness with half the optimal margin
    A_ub2 = A_ub[:, :-1].copy()
    b_ub2 = b_ub.copy()
    if out:
        b_ub2[: len(out)] -= 0.5 * s_star
    A_ub2, b_ub2 = A_ub2[:-1], b_ub2[:-1]
    res2 = solve_lp(-np.ones(2 * n), A_ub2, b_ub2, A_eq[:, :-1], b[J])
    xs = res2.x if res2.status == "optimal" else res.x[:-1]
    return s_star, xs[:n] - xs[n:]


def _polish(sys: MaxAffineSystem, J: Sequence[int], x: np.ndarray) -> np.ndarray:
    AJ = sys.A[J]
    r = AJ @ x - sys.b[J]
    return x - np.linalg.lstsq(AJ, r, rcond=None)[0]


def _equalities_consistent(sys: MaxAffineSystem, J: Sequence[int]) -> bool:
    AJ, bJ = sys.A[J], sys.b[J]
    x = np.linalg.lstsq(AJ, bJ, rcond=None)[0]
    return bool(np.max(np.abs(AJ @ x - bJ)) <= 1e-9 * (1.0 + float(np.abs(bJ).max())))


def enumerate_active_sets(sys: MaxAffineSystem, max_size: int | None = None, box: float = BOX) -> ActiveSetCatalog:
    """All J with |J| <= max_size realized as J(x) at some x with f(x) = 0."""
    m = len(sys)
    notes = []
    if max_size is None:
        max_size = m
        if m > MAX_ROWS:
            warnings.warn(f"{m} rows: enumeration capped at subsets of size {MAX_ROWS}", stacklevel=2)
            notes.append(f"subset size capped at {MAX_ROWS}")
            max_size = MAX_ROWS
    if not 1 <= max_size <= m:
        raise InvalidInputError(f"max_size must lie in [1, {m}]")
    dead: list[frozenset[int]] = []  # index sets whose equalities are inconsistent
    entries = []
    for size in range(1, max_size + 1):
        for J in itertools.combinations(range(m), size):
            Jset = frozenset(J)
            if any(d <= Jset for d in dead):
                continue
            if not _equalities_consistent(sys, list(J)):
                dead.append(Jset)
                continue
            lp = _margin_lp(sys, list(J), box)
            if lp is None or lp[1] is None:
                continue
            s_star, x = lp
            x = _polish(sys, list(J), x)
            box_active = bool(np.max(np.abs(x)) >= box * (1.0 - 1e-9))
            labels = tuple(sys.labels[t] for t in J)
            op = sphere_min_over_set(sys.A[list(J)], sys.norm)
            entries.append(CatalogEntry(labels, x, float(s_star), op, box_active))
    if any(e.box_active for e in entries):
        notes.append("some witnesses sit on the box bound; consider a larger box")
    return ActiveSetCatalog(tuple(entries), max_size, tuple(notes))


def op_J(sys: MaxAffineSystem, J) -> SphereMinResult:
    """min over ||h|| = 1 of max_{t in J} <a_t, h>."""
    J = list(J)
    if not J:
        raise InvalidInputError("J must be nonempty")
    labels = ordered(sys, J)
    if len(labels) != len(set(map(str, J))):
        raise InvalidInputError(f"unknown labels in {J}")
    res = sphere_min_over_set(sys.rows_for(labels), sys.norm)
    return SphereMinResult(res.value, res.argmin_h, res.method, res.certified, labels)


class LowerBound(NamedTuple):
    value: float | Unbounded
    certified: bool
    argmin: tuple[str, ...] | None


def lower_bound_from_catalog(catalog: ActiveSetCatalog) -> LowerBound:
    if not catalog.entries:
        return LowerBound(UNBOUNDED, True, None)
    vals = [abs(e.op.value) for e in catalog.entries]
    k = int(np.argmin(vals))
    return LowerBound(float(vals[k]), all(e.op.certified for e in catalog.entries), catalog.entries[k].labels)


def hoffman_lower_bound(sys: MaxAffineSystem, max_size: int | None = None) -> LowerBound:
    """inf over realizable J of |OP(J)|, a lower bound on the Hoffman constant."""
    return lower_bound_from_catalog(enumerate_active_sets(sys, max_size))


def catalog_probes(catalog: ActiveSetCatalog, scales=(1e-3, 1e-2, 1e-1, 1.0, 10.0)) -> np.ndarray:
    """Points w - t*h_J stepping off each witness against its descent direction."""
    pts = [e.witness - t * e.op.argmin_h for e in catalog.entries if e.op.value < 0 for t in scales]
    return np.array(pts) if pts else np.zeros((0, 0))


@dataclass(frozen=True)
class SigmaEstimate:
    value: float | Unbounded
    witness: np.ndarray | None
    sample_count: int
    notes: tuple[str, ...] = ()


DEFAULT_SAMPLER = SamplerSpec(seed=0, count=500, radii=(1.0, 10.0))


def hoffman_sampled(sys: MaxAffineSystem, sampler: SamplerSpec = DEFAULT_SAMPLER, catalog: ActiveSetCatalog | None = None) -> SigmaEstimate:
    """inf over sampled infeasible x of f(x)/d(x, S): an upper estimate of sigma.

    With a catalog, its probe points are added to the sample.
    """
    if catalog is not None and len(catalog):
        probes = catalog_probes(catalog)
        if probes.size:
            extra = np.vstack([np.atleast_2d(np.asarray(sampler.extra, dtype=float)), probes]) if len(sampler.extra) else probes
            sampler = SamplerSpec(sampler.seed, sampler.count, sampler.radii, sampler.center, sampler.ridge_snap, tuple(map(tuple, extra)))
    est = global_modulus_direct(sys, sampler=sampler)
    notes = list(est.notes)
    if est.value is UNBOUNDED:
        warnings.warn("every sample is feasible; sampled Hoffman constant is +inf", stacklevel=2)
        notes.append("all samples feasible")
    return SigmaEstimate(est.value, est.witness, est.sample_count, tuple(notes))


def perturb_system(sys: MaxAffineSystem, anchor, direction, eps: float) -> MaxAffineSystem:
    """Rows (a_t + eps*u, b_t + eps*<u, anchor>) for a zero-level anchor and a
    direction u in the dual unit ball. The perturbed function vanishes at the anchor."""
    anchor = as_vec(anchor, sys.dim)
    u = as_vec(direction, sys.dim)
    if abs(evaluate(sys, anchor)) > 1e-9:
        raise InvalidInputError("perturbation anchor must satisfy f(anchor) = 0")
    if sys.norm.dual_norm(u) > 1.0 + 1e-12:
        raise InvalidInputError("perturbation direction must lie in the dual unit ball")
    if eps < 0:
        raise InvalidInputError("eps must be nonnegative")
    return sys.shifted(u, eps, anchor)


@dataclass(frozen=True)
class SweepCell:
    eps: float
    anchor_id: int
    direction_id: int
    lower_bound: float | Unbounded
    sigma_sampled: float | Unbounded
    certified: bool = True
    error: str | None = None


@dataclass(frozen=True)
class SweepResult:
    cells: tuple[SweepCell, ...]
    anchors: tuple[np.ndarray, ...]
    directions: tuple[np.ndarray, ...]

    def summary(self) -> list[tuple[float, float | Unbounded, float | Unbounded]]:
        """(eps, min lower bound, min sampled sigma) per eps."""
        out = []
        for eps in sorted({c.eps for c in self.cells}):
            ok = [c for c in self.cells if c.eps == eps and c.error is None]
            lb = min((c.lower_bound for c in ok), default=UNBOUNDED, key=_key)
            sg = min((c.sigma_sampled for c in ok), default=UNBOUNDED, key=_key)
            out.append((eps, lb, sg))
        return out


def _key(v):
    return math.inf if v is UNBOUNDED else v


def default_directions(sys: MaxAffineSystem, count: int, seed: int) -> list[np.ndarray]:
    """+/- coordinate units, then ``count`` seeded random unit vectors of the dual norm."""
    n = sys.dim
    dirs = []
    for i in range(n):
        for s in (1.0, -1.0):
            e = np.zeros(n)
            e[i] = s
            dirs.append(e)
    rng = np.random.default_rng(seed)
    dual = sys.norm.dual
    for _ in range(count):
        g = rng.standard_normal(n)
        dirs.append(g / dual(g))
    return dirs


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("ERRBOUND_THREADS", "1")))
    except ValueError:
        return 1


def perturbation_sweep(
    sys: MaxAffineSystem,
    eps_grid: Sequence[float],
    direction_count: int = 2,
    anchors: Sequence | None = None,
    directions: Sequence | None = None,
    seed: int = 0,
    sampler: SamplerSpec = DEFAULT_SAMPLER,
    max_size: int | None = None,
) -> SweepResult:
    """Lower bound and sampled sigma for every (eps, anchor, direction) cell."""
    if anchors is None:
        anchors = [e.witness for e in enumerate_active_sets(sys, max_size).entries]
    anchors = [as_vec(a, sys.dim) for a in anchors]
    if directions is None:
        directions = default_directions(sys, direction_count, seed)
    directions = [as_vec(d, sys.dim) for d in directions]

    def run(cell):
        eps, ai, di = cell
        try:
            pert = perturb_system(sys, anchors[ai], directions[di], eps)
            cat = enumerate_active_sets(pert, max_size)
            lb = lower_bound_from_catalog(cat)
            sg = hoffman_sampled(pert, sampler, cat)
            return SweepCell(eps, ai, di, lb.value, sg.value, lb.certified)
        except Exception as exc:  # noqa: BLE001 - recorded per cell, sweep continues
            return SweepCell(eps, ai, di, UNBOUNDED, UNBOUNDED, False, f"{type(exc).__name__}: {exc}")

    grid = [(float(e), ai, di) for e in sorted(eps_grid) for ai in range(len(anchors)) for di in range(len(directions))]
    threads = _threads()
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool, warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cells = list(pool.map(run, grid))
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cells = [run(c) for c in grid]
    return SweepResult(tuple(cells), tuple(anchors), tuple(directions))


@dataclass(frozen=True)
class HoffmanReport:
    catalog: ActiveSetCatalog
    lower_bound: float | Unbounded
    lower_bound_certified: bool
    sigma_sampled: float | Unbounded
    sigma_witness: np.ndarray | None
    stability_verdict: str
    sweep: SweepResult | None = None
    notes: tuple[str, ...] = field(default=())


def hoffman_report(
    sys: MaxAffineSystem,
    max_size: int | None = None,
    sampler: SamplerSpec = DEFAULT_SAMPLER,
    sweep_eps: Sequence[float] | None = None,
    direction_count: int = 2,
    seed: int = 0,
) -> HoffmanReport:
    catalog = enumerate_active_sets(sys, max_size)
    lb = lower_bound_from_catalog(catalog)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sg = hoffman_sampled(sys, sampler, catalog)
    if lb.value is UNBOUNDED:
        verdict = "inconclusive"
    else:
        scale = float(np.max(np.linalg.norm(sys.A, axis=1)))
        band = 1e-7 * (1.0 + scale)
        if lb.value > band:
            verdict = "stable"
        else:
            verdict = "unstable" if lb.certified else "inconclusive"
    sweep = None
    if sweep_eps:
        sweep = perturbation_sweep(sys, sweep_eps, direction_count, seed=seed, sampler=sampler, max_size=max_size)
    notes = catalog.notes + sg.notes
    return HoffmanReport(catalog, lb.value, lb.certified, sg.value, sg.witness, verdict, sweep, notes)
