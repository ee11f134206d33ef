"""Weighted empirical moments used by CLIME and the bootstrap covariance."""
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMu, DimensionMismatch
from .loss import psi, psi_prime, weight

DEFAULT_MU_FLOOR = 1e-3


@dataclass(frozen=True)
class WeightedMoments:
    sigma_x_hat: np.ndarray
    s_x_hat: np.ndarray
    n_used: int
    threshold: float


@dataclass(frozen=True)
class MuEstimate:
    mu_hat: np.ndarray
    floor: float = DEFAULT_MU_FLOOR

    @property
    def flagged(self):
        return np.flatnonzero(self.mu_hat < self.floor)

    def require(self, override=False):
        """Return ``mu_hat``, raising :class:`DegenerateMu` on flagged entries."""
        bad = self.flagged
        if bad.size and not override:
            raise DegenerateMu(bad.tolist(), self.mu_hat[bad].tolist(), self.floor)
        return self.mu_hat


def _weighted_gram(X, w):
    G = (X * w[:, None]).T @ X / X.shape[0]
    return (G + G.T) / 2


def weighted_covariance(sample, cfg):
    """``(1/n) sum_i X_{i-1} X_{i-1}^T w(X_{i-1})``."""
    X = sample.regressors
    return _weighted_gram(X, weight(X, cfg))


def weighted_covariance_sq(sample, cfg):
    """Same as :func:`weighted_covariance` with ``w**2``."""
    X = sample.regressors
    return _weighted_gram(X, weight(X, cfg) ** 2)


def weighted_moments(sample, cfg):
    X = sample.regressors
    w = weight(X, cfg)
    return WeightedMoments(_weighted_gram(X, w), _weighted_gram(X, w * w), sample.n, cfg.threshold)


def mu_hat(residuals, spec, floor=DEFAULT_MU_FLOOR):
    """Per-row curvature ``mu_k = mean_i psi'(res_ik)``. Entries below ``floor`` are flagged, not clamped."""
    if not floor > 0:
        raise ValueError("mu floor must be positive")
    residuals = np.asarray(residuals, dtype=float)
    if residuals.ndim != 2:
        raise DimensionMismatch("residuals must be an (n, p) matrix")
    return MuEstimate(psi_prime(spec, residuals).mean(axis=0), floor)


def psi_cross_moment(residuals, spec):
    residuals = np.asarray(residuals, dtype=float)
    if residuals.ndim != 2:
        raise DimensionMismatch("residuals must be an (n, p) matrix")
    P = psi(spec, residuals)
    C = P.T @ P / P.shape[0]
    return (C + C.T) / 2
