"""Dense two-phase simplex for the small LPs that certify weighting vectors.

Solves ``max c^T x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0`` on a
full tableau with Bland's rule. Problem sizes here are a handful of
variables, so nothing is done for sparsity or speed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import SolverError

TOL = 1e-11
MAX_PIVOTS = 10_000


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: Optional[np.ndarray] = None
    objective: float = float("nan")
    pivots: int = 0


def _pivot(T, row, col):
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]


def _run(T, basis, allowed, counter):
    """Maximize the objective stored (negated) in the last row of ``T``."""
    m = T.shape[0] - 1
    while True:
        obj = T[-1, :-1]
        entering = next((j for j in allowed if obj[j] < -TOL), None)
        if entering is None:
            return "optimal"
        col = T[:m, entering]
        best = None
        for r in range(m):
            if col[r] > TOL:
                ratio = T[r, -1] / col[r]
                if (
                    best is None
                    or ratio < best[0] - TOL
                    or (abs(ratio - best[0]) <= TOL and basis[r] < basis[best[1]])
                ):
                    best = (ratio, r)
        if best is None:
            return "unbounded"
        _pivot(T, best[1], entering)
        basis[best[1]] = entering
        counter[0] += 1
        if counter[0] > MAX_PIVOTS:
            raise SolverError("simplex exceeded the pivot limit")


def linprog_max(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).reshape(-1)
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).reshape(-1)
    if A_ub.shape != (b_ub.size, n) or A_eq.shape != (b_eq.size, n):
        raise ValueError("constraint shapes do not match the objective")
    if not (np.all(np.isfinite(A_ub)) and np.all(np.isfinite(b_ub))
            and np.all(np.isfinite(A_eq)) and np.all(np.isfinite(b_eq))):
        raise SolverError("non-finite LP data")

    m_ub, m_eq = b_ub.size, b_eq.size
    m = m_ub + m_eq
    # columns: x (n) | slacks (m_ub) | artificials (m) | rhs
    n_slack = m_ub
    T = np.zeros((m + 1, n + n_slack + m + 1))
    T[:m_ub, :n] = A_ub
    T[:m_ub, n:n + n_slack] = np.eye(m_ub)
    T[:m_ub, -1] = b_ub
    T[m_ub:m, :n] = A_eq
    T[m_ub:m, -1] = b_eq
    neg = T[:m, -1] < 0
    T[:m][neg] *= -1.0
    art0 = n + n_slack
    basis = []
    for r in range(m):
        if r < m_ub and not neg[r]:
            basis.append(n + r)
        else:
            T[r, art0 + r] = 1.0
            basis.append(art0 + r)
    art_rows = [r for r in range(m) if basis[r] >= art0]

    counter = [0]
    # phase 1: maximize -(sum of artificials)
    T[-1, :] = 0.0
    for r in art_rows:
        T[-1, art0 + r] = 1.0
    for r in art_rows:
        T[-1] -= T[r]
    _run(T, basis, list(range(art0 + m)), counter)
    if -T[-1, -1] > 1e-9 * max(1.0, np.abs(T[:m, -1]).max(initial=0.0)):
        return LPResult("infeasible", pivots=counter[0])

    # drive remaining artificials out of the basis; drop redundant rows
    keep = []
    for r in range(m):
        if basis[r] >= art0:
            cand = next((j for j in range(art0) if abs(T[r, j]) > TOL), None)
            if cand is None:
                continue
            _pivot(T, r, cand)
            basis[r] = cand
        keep.append(r)
    T = np.vstack([T[keep], T[-1:]])
    basis = [basis[r] for r in keep]
    T = np.hstack([T[:, :art0], T[:, -1:]])

    # phase 2
    T[-1, :] = 0.0
    T[-1, :n] = -c
    for r, b in enumerate(basis):
        if T[-1, b] != 0.0:
            T[-1] -= T[-1, b] * T[r]
    status = _run(T, basis, list(range(art0)), counter)
    if status == "unbounded":
        return LPResult("unbounded", pivots=counter[0])
    x = np.zeros(art0)
    for r, b in enumerate(basis):
        x[b] = T[r, -1]
    x = x[:n]
    return LPResult("optimal", x, float(c @ x), counter[0])
