"""End-to-end fit: pilot, moments, CLIME, de-biasing and bootstrap factors."""
from dataclasses import asdict, dataclass, field
import numpy as np

from . import bootstrap, clime, debias, moments
from .loss import RobustLossSpec, WeightConfig, default_threshold
from .pilot import SolverOptions, default_pilot_lambda, fit_all


@dataclass(frozen=True)
class InferenceConfig:
    """Tuning for one fit. ``None`` means "use the data-driven default"."""

    loss: str = "smoothed_huber_1"
    threshold: float = None
    threshold_quantile: float = 0.95
    pilot_c: float = 0.5
    pilot_lambda: float = None
    clime_rule: str = "fallback"
    clime_c: float = 0.5
    clime_fallback_c: float = 0.5
    clime_lambda: float = None
    omega_l1_proxy: float = 1.0
    decay_threshold: float = 0.5
    mu_floor: float = moments.DEFAULT_MU_FLOOR
    max_iter: int = 5000
    tol: float = 1e-8
    draws: int = bootstrap.DEFAULT_DRAWS
    alpha: float = 0.05
    allow_unconverged: bool = False
    allow_degenerate_mu: bool = False

    def __post_init__(self):
        RobustLossSpec(self.loss)
        if self.clime_rule not in ("theory", "fallback"):
            raise ValueError("clime_rule must be 'theory' or 'fallback'")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.draws < 1:
            raise ValueError("draws must be positive")

    def to_dict(self):
        return asdict(self)


@dataclass
class FitResult:
    pilot: object
    weight: WeightConfig
    moments: object
    mu: object
    psi_cross: np.ndarray
    precision: object
    estimate: object
    covariance: object
    tuning: dict = field(default_factory=dict)


def choose_lambda_n(sample, cfg, wcfg, tau=None, gamma=None):
    """CLIME level: explicit value, rate shape with known ``(tau, gamma)``, or the fallback."""
    if cfg.clime_lambda is not None:
        return float(cfg.clime_lambda), "fixed"
    if cfg.clime_rule == "theory" and tau is not None:
        lam = clime.default_lambda_n(sample.n, sample.p, tau, gamma, wcfg, cfg.clime_c, cfg.omega_l1_proxy)
        return lam, "theory"
    return clime.fallback_lambda_n(sample.n, sample.p, cfg.clime_fallback_c), "fallback"


def fit(sample, cfg=InferenceConfig(), tau=None, gamma=None):
    """Run every estimation stage on ``sample``.

    ``tau`` and ``gamma`` describe the true design when it is known (as in
    simulations) and feed the rate-shaped CLIME level.
    """
    spec = RobustLossSpec(cfg.loss)
    wcfg = WeightConfig(cfg.threshold) if cfg.threshold is not None else default_threshold(sample, cfg.threshold_quantile)
    lam = cfg.pilot_lambda if cfg.pilot_lambda is not None else default_pilot_lambda(sample.n, sample.p, wcfg, cfg.pilot_c)
    pilot = fit_all(sample, lam, spec, wcfg, SolverOptions(cfg.max_iter, cfg.tol))
    mom = moments.weighted_moments(sample, wcfg)
    mu = moments.mu_hat(pilot.residuals, spec, cfg.mu_floor)
    psi_cross = moments.psi_cross_moment(pilot.residuals, spec)
    lam_n, rule = choose_lambda_n(sample, cfg, wcfg, tau, gamma)
    precision = clime.clime(mom.sigma_x_hat, lam_n)
    est = debias.debias(pilot, sample, precision, spec, wcfg, mu, cfg.allow_unconverged, cfg.allow_degenerate_mu)
    cov = bootstrap.build_dhat_factors(precision, mom, mu, psi_cross, cfg.allow_degenerate_mu)
    tuning = {
        "threshold": wcfg.threshold,
        "pilot_lambda": lam,
        "clime_lambda": lam_n,
        "clime_rule": rule,
        "tau": tau,
        "gamma": gamma,
    }
    return FitResult(pilot, wcfg, mom, mu, psi_cross, precision, est, cov, tuning)


def test(result, beta0, cfg=InferenceConfig(), seed=0):
    return bootstrap.simultaneous_test(result.estimate, beta0, result.covariance, cfg.draws, cfg.alpha, seed)


test.__test__ = False


def confidence_intervals(result, cfg=InferenceConfig(), seed=0):
    return bootstrap.simultaneous_ci(result.estimate, result.covariance, cfg.draws, cfg.alpha, seed)
