"""Gaussian multiplier bootstrap for the max statistic.

The bootstrap covariance has block ``(j, k)`` equal to ``M[j, k] * K`` with
``M = psi-cross / (mu mu^T)`` and ``K = Omega S_x Omega^T``, i.e. it is the
Kronecker product ``M (x) K``. A draw ``Z = m_root G k_root^T`` with i.i.d.
normal ``G`` therefore has ``Cov(Z[j, a], Z[k, b]) = M[j, k] K[a, b]``, the
same law as ``D^{1/2} eta`` laid out as a ``p x p`` coefficient matrix.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import rng as _rng
from .debias import test_statistic
from .errors import EmptyDraws, ExcessiveClip

DEFAULT_DRAWS = 1000
CLIP_RELATIVE_LIMIT = 1e-6


@dataclass
class BootstrapCovariance:
    m_factor: np.ndarray
    k_factor: np.ndarray
    m_root: np.ndarray
    k_root: np.ndarray
    psd_clip_magnitude: float

    def dense(self):
        """Full ``p^2 x p^2`` covariance (clipped factors); small ``p`` only."""
        return np.kron(self.m_root @ self.m_root.T, self.k_root @ self.k_root.T)


@dataclass
class TestReport:
    statistic: float
    critical_value: float
    alpha: float
    reject_global: bool
    rejected_entries: list
    p_value: float
    w_draws: np.ndarray = field(repr=False)
    seed: int

    __test__ = False

    def to_dict(self, include_draws=False):
        d = {
            "statistic": self.statistic,
            "critical_value": self.critical_value,
            "alpha": self.alpha,
            "reject_global": self.reject_global,
            "rejected_entries": [list(e) for e in self.rejected_entries],
            "p_value": self.p_value,
            "draws": int(len(self.w_draws)),
            "seed": self.seed,
        }
        if include_draws:
            d["w_draws"] = self.w_draws.tolist()
        return d


def psd_root(A):
    """Symmetric square root after zeroing negative eigenvalues.

    Returns the root and the most negative eigenvalue clipped (0 if none).
    """
    A = (np.asarray(A, dtype=float) + np.asarray(A, dtype=float).T) / 2
    vals, vecs = np.linalg.eigh(A)
    clipped = float(max(0.0, -vals.min())) if vals.size else 0.0
    root = (vecs * np.sqrt(np.maximum(vals, 0.0))) @ vecs.T
    return root, clipped


def build_dhat_factors(precision, moments, mu, psi_cross, allow_degenerate_mu=False, check_clip=True):
    omega = precision.omega if hasattr(precision, "omega") else np.asarray(precision, dtype=float)
    s_x = moments.s_x_hat if hasattr(moments, "s_x_hat") else np.asarray(moments, dtype=float)
    mu_hat = mu.require(override=allow_degenerate_mu) if hasattr(mu, "require") else np.asarray(mu, dtype=float)
    M = np.asarray(psi_cross, dtype=float) / np.outer(mu_hat, mu_hat)
    M = (M + M.T) / 2
    K = omega @ s_x @ omega.T
    K = (K + K.T) / 2
    m_root, m_clip = psd_root(M)
    k_root, k_clip = psd_root(K)
    clip = max(m_clip, k_clip)
    scale = max(np.trace(M), np.trace(K), 0.0)
    if check_clip and clip > CLIP_RELATIVE_LIMIT * scale:
        raise ExcessiveClip(f"clipped eigenvalue {clip:.3g} exceeds {CLIP_RELATIVE_LIMIT:g} x trace {scale:.3g}")
    return BootstrapCovariance(M, K, m_root, k_root, clip)


def dense_dhat(omega, psi_cross, s_x, mu_hat):
    """Block-by-block assembly of the bootstrap covariance (reference path)."""
    p = len(mu_hat)
    D = np.zeros((p * p, p * p))
    for j in range(p):
        for k in range(p):
            D[j * p:(j + 1) * p, k * p:(k + 1) * p] = omega @ (psi_cross[j, k] * s_x) @ omega.T / (mu_hat[j] * mu_hat[k])
    return D


def draw_matrices(cov, seed, draws):
    """``Z_b = m_root G_b k_root^T`` for ``b = 0..draws-1``; each ``G_b`` comes from its own sub-stream."""
    p = cov.m_root.shape[0]
    G = np.empty((draws, p, p))
    for b in range(draws):
        G[b] = _rng.substream(seed, _rng.BOOTSTRAP, b).standard_normal((p, p))
    return cov.m_root @ G @ cov.k_root.T


def sample_w(cov, gen):
    """One bootstrap draw of the max statistic from generator ``gen``."""
    p = cov.m_root.shape[0]
    G = gen.standard_normal((p, p))
    return float(np.abs(cov.m_root @ G @ cov.k_root.T).max())


def w_draws(cov, seed, draws=DEFAULT_DRAWS):
    Z = draw_matrices(cov, seed, draws)
    return np.abs(Z).reshape(draws, -1).max(axis=1)


def critical_value(draws, alpha):
    """``ceil(B (1 - alpha))``-th order statistic of the draws."""
    w = np.sort(np.asarray(draws, dtype=float).ravel())
    if w.size == 0:
        raise EmptyDraws("no bootstrap draws")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    B = w.size
    # guard against B*(1-alpha) landing a hair above an integer
    r = math.ceil(B * (1.0 - alpha) - 1e-9 * B)
    r = min(max(r, 1), B)
    return float(w[r - 1])


def p_value(draws, statistic):
    draws = np.asarray(draws, dtype=float)
    return (1.0 + np.count_nonzero(draws >= statistic)) / (draws.size + 1.0)


def simultaneous_test(estimate, beta0, cov, draws=DEFAULT_DRAWS, alpha=0.05, seed=0):
    w = w_draws(cov, seed, draws)
    stat = test_statistic(estimate, beta0)
    c = critical_value(w, alpha)
    dev = math.sqrt(estimate.n) * np.abs(estimate.beta_check - np.asarray(beta0, dtype=float))
    entries = [(int(j), int(k)) for j, k in zip(*np.nonzero(dev > c))]
    return TestReport(stat, c, alpha, bool(stat > c), entries, float(p_value(w, stat)), w, seed)


def simultaneous_ci(estimate, cov, draws=DEFAULT_DRAWS, alpha=0.05, seed=0):
    """Intervals ``beta_check +- c(alpha)/sqrt(n)``; returns ``(lower, upper)`` arrays."""
    w = w_draws(cov, seed, draws)
    half = critical_value(w, alpha) / math.sqrt(estimate.n)
    return estimate.beta_check - half, estimate.beta_check + half
