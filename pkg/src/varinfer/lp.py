"""Dense two-phase tableau simplex for small inequality-form LPs.

Solves ``min c^T x  s.t.  A x <= b,  x >= 0``. Bland's rule is used for
both entering and leaving variables, so the method cannot cycle.
"""
from dataclasses import dataclass

import numpy as np


class InfeasibleLP(Exception):
    pass


class UnboundedLP(Exception):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    fun: float
    iterations: int


def _pivot(T, row, col):
    T[row] /= T[row, col]
    piv = T[row]
    others = np.abs(T[:, col]) > 0
    others[row] = False
    T[others] -= np.outer(T[others, col], piv)


def _run(T, basis, cost_row, n_cols, eps, max_iter):
    """Iterate on tableau ``T``; ``cost_row`` indexes the reduced-cost row."""
    m = len(basis)
    for it in range(max_iter):
        rc = T[cost_row, :n_cols]
        cand = np.flatnonzero(rc < -eps)
        if cand.size == 0:
            return it
        col = cand[0]
        colvals = T[:m, col]
        pos = colvals > eps
        if not pos.any():
            raise UnboundedLP("objective unbounded below")
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / colvals[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + eps * max(1.0, abs(best)))
        row = min(ties, key=lambda r: basis[r])
        _pivot(T, row, col)
        basis[row] = col
    raise RuntimeError("simplex iteration limit reached")


def simplex(c, A_ub, b_ub, eps=1e-11, max_iter=10000):
    c = np.asarray(c, dtype=float)
    A = np.asarray(A_ub, dtype=float)
    b = np.asarray(b_ub, dtype=float)
    m, nv = A.shape
    # x | slack | artificial | rhs ; rows with b < 0 are negated and get an artificial
    neg = b < 0
    n_art = int(neg.sum())
    ncol = nv + m + n_art
    T = np.zeros((m + 2, ncol + 1))
    sign = np.where(neg, -1.0, 1.0)
    T[:m, :nv] = A * sign[:, None]
    T[:m, nv:nv + m] = np.diag(sign)
    T[:m, -1] = b * sign
    basis = list(range(nv, nv + m))
    for a, r in enumerate(np.flatnonzero(neg)):
        T[r, nv + m + a] = 1.0
        basis[r] = nv + m + a
    T[m, :nv] = c
    total = 0
    if n_art:
        # phase 1 cost row: minimize the sum of artificials
        T[m + 1, nv + m:ncol] = 1.0
        for r in np.flatnonzero(neg):
            T[m + 1] -= T[r]
        total += _run(T, basis, m + 1, ncol, eps, max_iter)
        if T[m + 1, -1] < -1e-9 * max(1.0, np.abs(b).max()):
            raise InfeasibleLP("no feasible point")
        # drive remaining artificials out of the basis
        for r in range(m):
            if basis[r] >= nv + m:
                nz = np.flatnonzero(np.abs(T[r, :nv + m]) > eps)
                if nz.size:
                    _pivot(T, r, nz[0])
                    basis[r] = nz[0]
        T[:, nv + m:ncol] = 0.0
    total += _run(T, basis, m, nv + m, eps, max_iter)
    x = np.zeros(nv + m + n_art)
    for r, j in enumerate(basis):
        x[j] = T[r, -1]
    xs = np.maximum(x[:nv], 0.0)
    return LPResult(xs, float(c @ xs), total)
