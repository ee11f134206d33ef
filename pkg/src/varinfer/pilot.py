"""Row-wise l1-penalized robust M-estimation of the transition matrix.

Each row ``beta_k`` solves

    min_b (1/n) sum_i loss(X_{ik} - X_{i-1}^T b) w(X_{i-1}) + lambda |b|_1

with monotone FISTA and function-value restarts.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, NotConverged
from .loss import loss_value, psi, weight


@dataclass(frozen=True)
class SolverOptions:
    max_iter: int = 5000
    tol: float = 1e-8
    kkt_tol: float = 1e-7


@dataclass
class RowFit:
    beta: np.ndarray
    iterations: int
    objective_trace: list
    converged: bool
    kkt_residual: float


@dataclass
class PilotFit:
    beta_hat: np.ndarray
    lam: float
    residuals: np.ndarray
    iterations_per_row: np.ndarray
    objective_trace: list
    converged: np.ndarray
    kkt_residuals: np.ndarray = field(default=None)

    @property
    def all_converged(self):
        return bool(np.all(self.converged))

    def to_dict(self):
        return {
            "beta_hat": self.beta_hat.tolist(),
            "lambda": self.lam,
            "iterations_per_row": self.iterations_per_row.tolist(),
            "converged": self.converged.tolist(),
            "kkt_residuals": None if self.kkt_residuals is None else self.kkt_residuals.tolist(),
            "final_objective": [t[-1] for t in self.objective_trace],
        }


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


class _RowProblem:
    def __init__(self, X, y, w, spec, lam):
        self.X, self.y, self.w, self.spec, self.lam = X, y, w, spec, lam
        self.n = X.shape[0]

    def smooth(self, b):
        return float(loss_value(self.spec, self.y - self.X @ b) @ self.w / self.n)

    def grad(self, b):
        r = self.y - self.X @ b
        return -(self.X.T @ (psi(self.spec, r) * self.w)) / self.n

    def penalized(self, b):
        return self.smooth(b) + self.lam * float(np.abs(b).sum())

    def kkt(self, b):
        g = self.grad(b)
        nz = b != 0
        gap = np.where(nz, np.abs(g + self.lam * np.sign(b)), np.maximum(np.abs(g) - self.lam, 0.0))
        return float(gap.max()) if gap.size else 0.0


def lipschitz_bound(sample, cfg):
    """Largest eigenvalue of the weighted covariance; valid since psi' <= 1 and w <= 1."""
    X = sample.regressors
    w = weight(X, cfg)
    G = (X * w[:, None]).T @ X / sample.n
    return float(np.linalg.eigvalsh((G + G.T) / 2)[-1])


def _fista(prob, b0, L, opts):
    b = b0.copy()
    F = prob.penalized(b)
    trace = [F]
    z = b.copy()
    t = 1.0
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        fz = prob.smooth(z)
        gz = prob.grad(z)
        # backtracking: halve the step (double L) on sufficient-decrease violation
        while True:
            cand = soft_threshold(z - gz / L, prob.lam / L)
            d = cand - z
            if prob.smooth(cand) <= fz + gz @ d + 0.5 * L * (d @ d) + 1e-15 * max(1.0, abs(fz)):
                break
            L *= 2.0
        Fc = prob.penalized(cand)
        t_next = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        # a plain prox step (t == 1) with a valid L is a descent step; an apparent
        # increase at rounding level must not stall the iteration
        slack = 4 * np.finfo(float).eps * max(1.0, abs(F)) if t == 1.0 else 0.0
        if Fc <= F + slack:
            decrease = max(F - Fc, 0.0)
            z = cand + ((t - 1.0) / t_next) * (cand - b)
            b, F = cand, Fc
            t = t_next
            trace.append(F)
            if decrease <= opts.tol * max(1.0, abs(F)) and prob.kkt(b) <= opts.kkt_tol:
                converged = True
                break
        else:
            # function-value restart; the next step is a plain prox step from b
            z = b.copy()
            t = 1.0
            trace.append(F)
    return b, it, trace, converged


def fit_row(k, sample, lam, spec, cfg, opts=SolverOptions(), beta0=None, L=None, strict=False):
    """Fit row ``k`` (0-based) of the pilot estimate."""
    p = sample.p
    if not 0 <= k < p:
        raise IndexOutOfRange(f"row index {k} outside 0..{p - 1}")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    X = sample.regressors
    prob = _RowProblem(X, sample.responses[:, k], weight(X, cfg), spec, float(lam))
    b0 = np.zeros(p) if beta0 is None else np.asarray(beta0, dtype=float)
    if b0.shape != (p,):
        raise DimensionMismatch("warm start must have length p")
    if L is None:
        L = lipschitz_bound(sample, cfg)
    L = max(L, 1e-12)
    b, it, trace, ok = _fista(prob, b0, L, opts)
    row = RowFit(b, it, trace, ok, prob.kkt(b))
    if strict and not ok:
        raise NotConverged(f"row {k} did not converge in {opts.max_iter} iterations", row)
    return row


def fit_all(sample, lam, spec, cfg, opts=SolverOptions(), beta0=None):
    """Fit every row; non-converged rows are flagged in the result, not raised."""
    p = sample.p
    L = lipschitz_bound(sample, cfg)
    rows = []
    for k in range(p):
        start = None if beta0 is None else np.asarray(beta0)[k]
        rows.append(fit_row(k, sample, lam, spec, cfg, opts, beta0=start, L=L))
    beta = np.vstack([r.beta for r in rows])
    res = sample.responses - sample.regressors @ beta.T
    return PilotFit(
        beta_hat=beta,
        lam=float(lam),
        residuals=res,
        iterations_per_row=np.array([r.iterations for r in rows]),
        objective_trace=[r.objective_trace for r in rows],
        converged=np.array([r.converged for r in rows]),
        kkt_residuals=np.array([r.kkt_residual for r in rows]),
    )


def default_pilot_lambda(n, p, cfg, c=0.5):
    T = cfg.threshold if hasattr(cfg, "threshold") else float(cfg)
    return c * T * math.sqrt(math.log(p) / n)


def lambda_path(sample, spec, cfg, lambdas, opts=SolverOptions()):
    """Fit a decreasing lambda grid with warm starts; returns fits in grid order."""
    order = np.argsort(lambdas)[::-1]
    fits = [None] * len(lambdas)
    warm = None
    for idx in order:
        fit = fit_all(sample, lambdas[idx], spec, cfg, opts, beta0=warm)
        warm = fit.beta_hat
        fits[idx] = fit
    return fits


def select_bic(sample, spec, cfg, lambdas, opts=SolverOptions()):
    """Pick the lambda minimizing a BIC-type criterion ``2n*objective + log(n)*df``."""
    from .loss import objective

    fits = lambda_path(sample, spec, cfg, lambdas, opts)
    n = sample.n
    crit = [2 * n * objective(f.beta_hat, sample, spec, cfg) + math.log(n) * np.count_nonzero(f.beta_hat) for f in fits]
    best = int(np.argmin(crit))
    return fits[best], crit
