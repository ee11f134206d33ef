"""Smoothed Huber losses, the tail weight, and the weighted objective.

Two thrice-differentiable robust losses are provided. Both are quadratic
at the origin and linear in the tails, so ``psi = loss'`` is bounded.

Sign convention: :func:`score` returns ``+(1/n) sum psi(res) x w(x)``,
which is the *negative* gradient of :func:`objective`. The one-step
correction in :mod:`varinfer.debias` adds it.
"""
from dataclasses import dataclass
import math

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange

SQRT2 = math.sqrt(2.0)
KINDS = ("smoothed_huber_1", "smoothed_huber_2")


@dataclass(frozen=True)
class RobustLossSpec:
    kind: str = "smoothed_huber_1"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}; choose from {KINDS}")

    @property
    def knot(self):
        return 1.0 if self.kind == "smoothed_huber_1" else SQRT2

    @property
    def psi_bound(self):
        return 0.5 if self.kind == "smoothed_huber_1" else 2 * SQRT2 / 3

    @property
    def curvature_bound(self):
        return 1.0


@dataclass(frozen=True)
class WeightConfig:
    threshold: float

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("weight threshold T must be positive")


def _kind(spec):
    return spec.kind if isinstance(spec, RobustLossSpec) else RobustLossSpec(spec).kind


def loss_value(spec, x):
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    if _kind(spec) == "smoothed_huber_1":
        return np.where(a <= 1.0, x * x / 2 - a ** 3 / 6, a / 2 - 1.0 / 6)
    return np.where(a <= SQRT2, x * x / 2 - x ** 4 / 24, (2 * SQRT2 / 3) * a - 0.5)


def psi(spec, x):
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    if _kind(spec) == "smoothed_huber_1":
        return np.where(a <= 1.0, x - x * a / 2, np.sign(x) / 2)
    return np.where(a <= SQRT2, x - x ** 3 / 6, np.sign(x) * (2 * SQRT2 / 3))


def psi_prime(spec, x):
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    if _kind(spec) == "smoothed_huber_1":
        return np.maximum(1.0 - a, 0.0)
    return np.where(a <= SQRT2, 1.0 - x * x / 2, 0.0)


def psi_second(spec, x):
    # knots take the inner branch
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    if _kind(spec) == "smoothed_huber_1":
        return np.where(a <= 1.0, -np.sign(x), 0.0)
    return np.where(a <= SQRT2, -x, 0.0)


def weight(x, cfg):
    """``min(1, T^3 / |x|_inf^3)``; accepts a vector or a stack of row vectors."""
    T = cfg.threshold if isinstance(cfg, WeightConfig) else float(cfg)
    x = np.asarray(x, dtype=float)
    m = np.abs(x).max(axis=-1)
    w = (T / np.maximum(m, T)) ** 3
    return w if w.ndim else float(w)


def default_threshold(sample, quantile=0.95):
    """Empirical ``quantile`` of ``|X_{i-1}|_inf`` over the regressors."""
    m = np.abs(sample.regressors).max(axis=1)
    T = float(np.quantile(m, quantile))
    if T <= 0:
        T = 1.0
    return WeightConfig(T)


def _check_beta(beta, sample):
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (sample.p, sample.p):
        raise DimensionMismatch(f"beta must be {sample.p}x{sample.p}, got {beta.shape}")
    return beta


def residuals(beta, sample):
    """``res[i, k] = X_{i,k} - X_{i-1}^T beta_k`` for ``i = 1..n``."""
    beta = _check_beta(beta, sample)
    return sample.responses - sample.regressors @ beta.T


def objective(beta, sample, spec, cfg):
    res = residuals(beta, sample)
    w = weight(sample.regressors, cfg)
    return float(loss_value(spec, res).sum(axis=1) @ w / sample.n)


def score(beta, sample, spec, cfg):
    """Row ``k``: ``(1/n) sum_i psi(res_ik) X_{i-1} w(X_{i-1})``."""
    res = residuals(beta, sample)
    w = weight(sample.regressors, cfg)
    return (psi(spec, res) * w[:, None]).T @ sample.regressors / sample.n


def hessian_block(beta, sample, spec, cfg, k):
    """Second derivative of the objective with respect to row ``k`` of beta."""
    if not 0 <= k < sample.p:
        raise IndexOutOfRange(f"row index {k} outside 0..{sample.p - 1}")
    res = residuals(beta, sample)[:, k]
    w = weight(sample.regressors, cfg)
    X = sample.regressors
    H = (X * (psi_prime(spec, res) * w)[:, None]).T @ X / sample.n
    return (H + H.T) / 2
