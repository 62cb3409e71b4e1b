"""Small dense two-phase simplex with Bland's rule.

Solves ``maximize c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0``.
Sized for the realizability LPs of the active-set catalog (a handful of
variables and rows); no attempt is made at sparsity or warm starts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-9


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    value: float | None
    iterations: int


def _reduce_equalities(A: np.ndarray, b: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray, bool]:
    """Gauss-Jordan elimination on [A | b]; drops dependent rows.

    Returns the reduced system and False when a row reduces to 0 = nonzero.
    """
    M = np.hstack([A, b[:, None]]).astype(float)
    m, n = A.shape
    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    row = 0
    for col in range(n):
        if row == m:
            break
        piv = row + int(np.argmax(np.abs(M[row:, col])))
        if abs(M[piv, col]) <= tol * scale:
            continue
        M[[row, piv]] = M[[piv, row]]
        M[row] /= M[row, col]
        for r in range(m):
            if r != row and M[r, col] != 0.0:
                M[r] -= M[r, col] * M[row]
        row += 1
    leftover = M[row:]
    if leftover.size and np.abs(leftover[:, -1]).max() > tol * scale:
        return M[:row, :-1], M[:row, -1], False
    return M[:row, :-1], M[:row, -1], True


def _pivot(T: np.ndarray, r: int, c: int) -> None:
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _run(T: np.ndarray, basis: list[int], allowed: int, max_iter: int) -> tuple[str, int]:
    """Bland's-rule iterations on tableau T (objective in the last row)."""
    m = T.shape[0] - 1
    for it in range(max_iter):
        obj = T[-1, :allowed]
        entering = np.flatnonzero(obj < -PIVOT_TOL)
        if entering.size == 0:
            return "optimal", it
        c = int(entering[0])
        column = T[:m, c]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if rows.size == 0:
            return "unbounded", it
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        r = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, r, c)
        basis[r] = c
    raise RuntimeError("simplex iteration limit reached")


def solve_lp(
    c: np.ndarray,
    A_ub: np.ndarray | None = None,
    b_ub: np.ndarray | None = None,
    A_eq: np.ndarray | None = None,
    b_eq: np.ndarray | None = None,
    max_iter: int = 10_000,
) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if A_eq.shape[0]:
        A_eq, b_eq, consistent = _reduce_equalities(A_eq, b_eq, 1e-12)
        if not consistent:
            return LPResult("infeasible", None, None, 0)

    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    # columns: x (n) | slacks (m_ub) | artificials (m) | rhs
    n_slack = m_ub
    T = np.zeros((m + 1, n + n_slack + m + 1))
    T[:m_ub, :n] = A_ub
    T[:m_ub, n : n + n_slack] = np.eye(m_ub)
    T[:m_ub, -1] = b_ub
    T[m_ub:m, :n] = A_eq
    T[m_ub:m, -1] = b_eq
    neg = T[:m, -1] < 0
    T[:m][neg] *= -1.0

    basis: list[int] = []
    art_start = n + n_slack
    for i in range(m):
        if i < m_ub and not neg[i]:
            basis.append(n + i)
        else:
            T[i, art_start + i] = 1.0
            basis.append(art_start + i)
    artificial_rows = [i for i in range(m) if basis[i] >= art_start]

    iterations = 0
    if artificial_rows:
        T[-1, :] = 0.0
        for i in artificial_rows:
            T[-1] -= T[i]
            T[-1, art_start + i] += 1.0  # cancels the artificial's own unit entry
        status, it = _run(T, basis, T.shape[1] - 1, max_iter)
        iterations += it
        if -T[-1, -1] > FEAS_TOL * max(1.0, float(np.abs(T[:m, -1]).max(initial=0.0))):
            return LPResult("infeasible", None, None, iterations)
        # drive artificials out of the basis
        keep = []
        for r in range(m):
            if basis[r] >= art_start:
                cand = np.flatnonzero(np.abs(T[r, :art_start]) > PIVOT_TOL)
                if cand.size == 0:
                    continue  # redundant row
                _pivot(T, r, int(cand[0]))
                basis[r] = int(cand[0])
            keep.append(r)
        T = np.vstack([T[keep], T[-1:]])
        basis = [basis[r] for r in keep]
        m = len(keep)

    # phase 2: drop artificial columns
    T = np.hstack([T[:, :art_start], T[:, -1:]])
    full_c = np.concatenate([c, np.zeros(n_slack)])
    T[-1, :] = 0.0
    T[-1, :art_start] = -full_c
    for r in range(m):
        cb = full_c[basis[r]]
        if cb != 0.0:
            T[-1] += cb * T[r]
    status, it = _run(T, basis, art_start, max_iter)
    iterations += it
    if status == "unbounded":
        return LPResult("unbounded", None, None, iterations)
    x = np.zeros(art_start)
    for r in range(m):
        x[basis[r]] = T[r, -1]
    x = x[:n]
    return LPResult("optimal", x, float(c @ x), iterations)


def is_feasible(A: np.ndarray, b: np.ndarray) -> tuple[bool, np.ndarray | None]:
    """Feasibility of {x : A x <= b} with x free (split into x+ - x-)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[1]
    res = solve_lp(np.zeros(2 * n), A_ub=np.hstack([A, -A]), b_ub=np.asarray(b, dtype=float))
    if res.status != "optimal":
        return False, None
    return True, res.x[:n] - res.x[n:]
