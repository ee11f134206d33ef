"""Independent reference computations used only by the tests.

Nothing here calls the code paths it is meant to check.
"""
from itertools import combinations

import numpy as np


def naive_weight(x, T):
    m = max(abs(v) for v in x)
    return 1.0 if m <= T else T ** 3 / m ** 3


def naive_loss1(x):
    a = abs(x)
    return x * x / 2 - a ** 3 / 6 if a <= 1 else a / 2 - 1 / 6


def naive_loss2(x):
    a = abs(x)
    return x * x / 2 - x ** 4 / 24 if a <= 2 ** 0.5 else (2 * 2 ** 0.5 / 3) * a - 0.5


NAIVE_LOSS = {"smoothed_huber_1": naive_loss1, "smoothed_huber_2": naive_loss2}


def naive_objective(beta, series, kind, T):
    n = series.shape[0] - 1
    p = series.shape[1]
    total = 0.0
    for i in range(1, n + 1):
        w = naive_weight(series[i - 1], T)
        for k in range(p):
            r = series[i, k] - sum(series[i - 1, j] * beta[k, j] for j in range(p))
            total += NAIVE_LOSS[kind](r) * w
    return total / n


def naive_gram(X, T, power=1):
    n, p = X.shape
    out = np.zeros((p, p))
    for i in range(n):
        w = naive_weight(X[i], T) ** power
        for a in range(p):
            for b in range(p):
                out[a, b] += X[i, a] * X[i, b] * w
    return out / n


def naive_psi_cross(psi_vals):
    n, p = psi_vals.shape
    out = np.zeros((p, p))
    for a in range(p):
        for b in range(p):
            out[a, b] = sum(psi_vals[i, a] * psi_vals[i, b] for i in range(n)) / n
    return out


def central_gradient(f, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[idx] = h
        g[idx] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def clime_column_by_enumeration(S, j, lam):
    """Exhaustive solve of ``min |t|_1 s.t. |S t - e_j|_inf <= lam``.

    The objective is linear on each orthant, so the optimum sits at a point
    where ``p`` hyperplanes drawn from the ``2p`` constraint faces and the
    ``p`` coordinate planes meet. Every such point is tried.
    """
    p = S.shape[0]
    e = np.zeros(p)
    e[j] = 1.0
    planes = [(S[r], lam + e[r]) for r in range(p)] + [(-S[r], lam - e[r]) for r in range(p)]
    planes += [(np.eye(p)[r], 0.0) for r in range(p)]
    best, best_t = np.inf, None
    for combo in combinations(range(len(planes)), p):
        M = np.array([planes[c][0] for c in combo])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        t = np.linalg.solve(M, np.array([planes[c][1] for c in combo]))
        if np.abs(S @ t - e).max() <= lam + 1e-9:
            val = np.abs(t).sum()
            if val < best:
                best, best_t = val, t
    return best, best_t


def dense_block_omega(omega_x, mu, v):
    """Apply the full ``p^2 x p^2`` block-diagonal matrix to the row-stacked ``v``."""
    p = len(mu)
    big = np.kron(np.diag(1.0 / np.asarray(mu)), omega_x)
    return (big @ np.asarray(v).reshape(-1)).reshape(p, p)


def dense_dhat_blocks(omega, psi_cross, s_x, mu):
    p = len(mu)
    D = np.zeros((p * p, p * p))
    for j in range(p):
        for k in range(p):
            blk = psi_cross[j, k] / (mu[j] * mu[k]) * (omega @ s_x @ omega.T)
            D[j * p:(j + 1) * p, k * p:(k + 1) * p] = blk
    return D


def cholesky_sampler(D, draws, seed):
    """Draws of ``N(0, D)`` via a jittered Cholesky factor of the dense matrix."""
    L = np.linalg.cholesky(D + 1e-12 * np.eye(D.shape[0]))
    g = np.random.default_rng(seed).standard_normal((draws, D.shape[0]))
    return g @ L.T


def ar_companion_roots(a, b):
    """Roots of ``z^2 - a z - b``."""
    return np.roots([1.0, -a, -b])
