"""CLIME estimate of the weighted precision matrix.

Column ``j`` solves ``min |theta|_1  s.t.  |Sigma theta - e_j|_inf <= lambda_n``
as a linear program in the split variables ``theta = u - v``; the column
solutions are then symmetrized by keeping the smaller-magnitude entry.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import linprog

from .errors import DimensionMismatch, IndexOutOfRange, NotConverged
from .lp import simplex

SIMPLEX_MAX_P = 64


@dataclass
class PrecisionEstimate:
    omega: np.ndarray
    lambda_n: float
    feasibility_gap: float
    column_l1_norms: np.ndarray
    theta: np.ndarray = None
    converged: bool = True

    def to_dict(self):
        return {
            "lambda_n": self.lambda_n,
            "feasibility_gap": self.feasibility_gap,
            "column_l1_norms": self.column_l1_norms.tolist(),
            "converged": self.converged,
        }


def column_lp(sigma_hat, j, lambda_n):
    """Inequality-form data ``(c, A_ub, b_ub)`` of the split column LP."""
    S = np.asarray(sigma_hat, dtype=float)
    p = S.shape[0]
    e = np.zeros(p)
    e[j] = 1.0
    c = np.ones(2 * p)
    A_ub = np.block([[S, -S], [-S, S]])
    b_ub = np.concatenate([lambda_n + e, lambda_n - e])
    return c, A_ub, b_ub


def clime_column(sigma_hat, j, lambda_n, tol=1e-7, method="auto"):
    """Solve one CLIME column.

    ``method`` is ``"simplex"`` (in-repo, exact), ``"highs"`` (scipy), or
    ``"auto"``, which uses the simplex for ``p <= 64``.
    """
    S = np.asarray(sigma_hat, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionMismatch("sigma_hat must be square")
    p = S.shape[0]
    if not 0 <= j < p:
        raise IndexOutOfRange(f"column {j} outside 0..{p - 1}")
    if not lambda_n > 0:
        raise ValueError("lambda_n must be positive")
    if method == "auto":
        method = "simplex" if p <= SIMPLEX_MAX_P else "highs"
    c, A_ub, b_ub = column_lp(S, j, lambda_n)
    if method == "simplex":
        x = simplex(c, A_ub, b_ub).x
    elif method == "highs":
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=(0, None), method="highs",
                      options={"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol})
        if res.status != 0:
            raise NotConverged(f"column {j}: {res.message}")
        x = res.x
    else:
        raise ValueError(f"unknown method {method!r}")
    return x[:p] - x[p:]


def symmetrize(theta):
    """Keep the smaller-magnitude entry of each symmetric pair; ties keep the upper-triangle entry."""
    theta = np.asarray(theta, dtype=float)
    upper = np.where(np.abs(theta) <= np.abs(theta.T), theta, theta.T)
    iu = np.triu_indices_from(theta, 1)
    omega = np.diag(np.diag(theta)).astype(float)
    omega[iu] = upper[iu]
    omega.T[iu] = upper[iu]
    return omega


def clime(sigma_hat, lambda_n, tol=1e-7, method="auto"):
    S = np.asarray(sigma_hat, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionMismatch("sigma_hat must be square")
    p = S.shape[0]
    theta = np.column_stack([clime_column(S, j, lambda_n, tol, method) for j in range(p)])
    gap = float(np.abs(S @ theta - np.eye(p)).max() - lambda_n)
    return PrecisionEstimate(
        omega=symmetrize(theta),
        lambda_n=float(lambda_n),
        feasibility_gap=gap,
        column_l1_norms=np.abs(theta).sum(axis=0),
        theta=theta,
        converged=gap <= tol,
    )


def default_lambda_n(n, p, tau, gamma, cfg, c=0.5, omega_l1_proxy=1.0):
    """Rate-shaped tuning ``c ||Omega||_1 gamma tau^2 T^2 (log p)^{3/2} / sqrt(n)``."""
    T = cfg.threshold if hasattr(cfg, "threshold") else float(cfg)
    return c * omega_l1_proxy * gamma * tau ** 2 * T ** 2 * math.log(p) ** 1.5 / math.sqrt(n)


def fallback_lambda_n(n, p, c=0.5):
    """Data-driven fallback ``c sqrt(log p / n)`` when the design is unknown."""
    return c * math.sqrt(math.log(p) / n)
