"""One-step de-biased estimator and the max-norm test statistic."""
from dataclasses import dataclass
import math

import numpy as np

from .errors import DegenerateMu, DimensionMismatch
from .loss import hessian_block, score


@dataclass
class DebiasedEstimate:
    beta_check: np.ndarray
    beta_hat: np.ndarray
    mu_hat: np.ndarray
    omega_x: np.ndarray
    score_at_pilot: np.ndarray
    threshold: float
    n: int = None

    @property
    def correction_max(self):
        return float(np.abs(self.beta_check - self.beta_hat).max())

    def to_dict(self):
        return {
            "n": self.n,
            "threshold": self.threshold,
            "mu_hat": self.mu_hat.tolist(),
            "correction_max": self.correction_max,
        }


def apply_block_omega(omega_x, mu_hat, v):
    """Multiply ``vec(v)`` by ``diag(1/mu) kron omega_x`` without forming it.

    Row ``k`` of the result is ``omega_x @ v[k] / mu_hat[k]``.
    """
    omega_x = np.asarray(omega_x, dtype=float)
    mu_hat = np.asarray(mu_hat, dtype=float)
    v = np.asarray(v, dtype=float)
    p = omega_x.shape[0]
    if omega_x.shape != (p, p) or v.shape != (p, p) or mu_hat.shape != (p,):
        raise DimensionMismatch("omega_x, v must be p x p and mu_hat length p")
    if np.any(mu_hat <= 0):
        bad = np.flatnonzero(mu_hat <= 0)
        raise DegenerateMu(bad.tolist(), mu_hat[bad].tolist(), 0.0)
    return (v @ omega_x.T) / mu_hat[:, None]


def debias(pilot, sample, precision, spec, cfg, mu, allow_unconverged=False, allow_degenerate_mu=False):
    """``beta_check = beta_hat + Omega_hat S(beta_hat)`` in block form.

    Parameters
    ----------
    pilot : PilotFit
    sample : VarSample
    precision : PrecisionEstimate or ndarray
        Symmetrized CLIME estimate of the weighted precision matrix.
    spec, cfg :
        Loss and weight configuration used by the pilot.
    mu : MuEstimate
        Curvature estimate from the pilot residuals.
    """
    from .errors import NotConverged

    if not allow_unconverged and not pilot.all_converged:
        rows = np.flatnonzero(~np.asarray(pilot.converged)).tolist()
        raise NotConverged(f"pilot rows {rows} did not converge", pilot)
    mu_hat = mu.require(override=allow_degenerate_mu)
    omega = precision.omega if hasattr(precision, "omega") else np.asarray(precision, dtype=float)
    S = score(pilot.beta_hat, sample, spec, cfg)
    beta_check = pilot.beta_hat + apply_block_omega(omega, mu_hat, S)
    return DebiasedEstimate(beta_check, pilot.beta_hat.copy(), np.array(mu_hat), omega, S, cfg.threshold, sample.n)


def test_statistic(estimate, beta0, n=None):
    """``sqrt(n) * max |beta_check - beta0|``."""
    beta0 = np.asarray(beta0, dtype=float)
    if beta0.shape != estimate.beta_check.shape:
        raise DimensionMismatch(f"beta0 shape {beta0.shape} != {estimate.beta_check.shape}")
    n = estimate.n if n is None else n
    return math.sqrt(n) * float(np.abs(estimate.beta_check - beta0).max())


test_statistic.__test__ = False  # not a pytest test


def block_delta(omega_x, mu_hat, beta, sample, spec, cfg):
    """``max_k || I - Omega_x H_k(beta) / mu_k ||_max`` (diagnostic)."""
    p = sample.p
    worst = 0.0
    for k in range(p):
        H = hessian_block(beta, sample, spec, cfg, k)
        worst = max(worst, float(np.abs(np.eye(p) - omega_x @ H / mu_hat[k]).max()))
    return worst
