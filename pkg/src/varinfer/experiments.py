"""Monte Carlo study: design generators, replication driver, qq and size tables."""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import csv
import math

import numpy as np

from . import rng as _rng
from .bootstrap import critical_value, simultaneous_test
from .errors import ConfigError, DegenerateDesign, EmptyInput, VarInferError
from .model import InnovationSpec, spectral_decay_index, spectral_radius, simulate
from .pipeline import InferenceConfig, fit


def banded_design(p, s, lam=0.5):
    """``lam^|i-j|`` on the band ``|i-j| <= s``, rescaled to spectral radius 1/2."""
    if not 1 <= s < p:
        raise DegenerateDesign(f"band width s={s} must satisfy 1 <= s < p={p}")
    if not 0 < lam < 1:
        raise DegenerateDesign("lambda must lie in (0, 1)")
    idx = np.arange(p)
    d = np.abs(idx[:, None] - idx[None, :])
    raw = np.where(d <= s, lam ** d, 0.0)
    rho = spectral_radius(raw)
    if rho == 0:
        raise DegenerateDesign("raw banded matrix has zero spectral radius")
    return raw / (2.0 * rho)


def block_diagonal_design(p, s, seed):
    """Upper-bidiagonal ``s x s`` blocks with ``lam_i`` on the diagonal and ``lam_i^2`` above it.

    ``lam_i ~ Unif(-0.8, 0.8)``; when ``s`` does not divide ``p`` the last
    block is truncated.
    """
    if s < 1:
        raise DegenerateDesign("block size must be positive")
    nblocks = math.ceil(p / s)
    lams = _rng.substream(seed, _rng.DESIGN).uniform(-0.8, 0.8, nblocks)
    A = np.zeros((p, p))
    for b, lam in enumerate(lams):
        lo, hi = b * s, min((b + 1) * s, p)
        for i in range(lo, hi):
            A[i, i] = lam
            if i + 1 < hi:
                A[i, i + 1] = lam ** 2
    return A


@dataclass(frozen=True)
class ExperimentConfig:
    design: str = "banded"
    design_lambda: float = 0.5
    block_size: int = None
    n: int = 30
    p: int = 10
    innovation: InnovationSpec = field(default_factory=lambda: InnovationSpec("student_t", df=10))
    replications: int = 100
    bootstrap_draws: int = 1000
    alpha: float = 0.05
    ci_alpha: float = None
    master_seed: int = 0
    power_delta: float = 0.0
    inference: InferenceConfig = field(default_factory=InferenceConfig)

    def validate(self):
        if self.design not in ("banded", "block_diagonal"):
            raise ConfigError(f"design: unknown kind {self.design!r}")
        for name in ("n", "p", "replications", "bootstrap_draws"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name}: must be positive")
        if self.p < 2:
            raise ConfigError("p: need at least 2 coordinates")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha: must lie in (0, 1)")
        if self.ci_alpha is not None and not 0 < self.ci_alpha < 1:
            raise ConfigError("ci_alpha: must lie in (0, 1)")
        if self.innovation.is_degenerate():
            raise ConfigError("innovation: zero innovations give a degenerate experiment")
        if self.master_seed < 0:
            raise ConfigError("master_seed: must be nonnegative")
        return self

    @property
    def s(self):
        return self.block_size if self.block_size is not None else max(1, int(math.floor(math.log(self.p))))

    @property
    def label(self):
        df = self.innovation.df if self.innovation.family == "student_t" else self.innovation.family
        if isinstance(df, float) and df.is_integer():
            df = int(df)
        return f"{self.design}_{df}"

    def transition(self):
        if self.design == "banded":
            return banded_design(self.p, self.s, self.design_lambda)
        return block_diagonal_design(self.p, self.s, self.master_seed)

    def to_dict(self):
        return {
            "design": self.design,
            "design_lambda": self.design_lambda,
            "block_size": self.s,
            "n": self.n,
            "p": self.p,
            "innovation": self.innovation.to_dict(),
            "replications": self.replications,
            "bootstrap_draws": self.bootstrap_draws,
            "alpha": self.alpha,
            "ci_alpha": self.ci_alpha,
            "master_seed": self.master_seed,
            "power_delta": self.power_delta,
            "inference": self.inference.to_dict(),
        }


@dataclass
class ReplicationRecord:
    rep_index: int
    seed: int
    statistic: float = math.nan
    c_alpha: float = math.nan
    reject: bool = False
    c_ci: float = math.nan
    covered: bool = False
    w_draws: np.ndarray = None
    failed: bool = False
    stage: str = ""
    error: str = ""


def replication_seed(master_seed, rep_index):
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(rep_index),))
    return int(ss.generate_state(1)[0])


def null_matrix(config, A):
    """Hypothesized matrix: the truth, or the truth with entry (0, 0) shifted in power mode."""
    beta0 = A.copy()
    if config.power_delta:
        beta0[0, 0] += config.power_delta
    return beta0


def run_replication(config, rep_index, A=None, decay=None):
    """Simulate, fit and test one replication; failures are recorded, not raised."""
    if A is None:
        A = config.transition()
    if decay is None:
        decay = spectral_decay_index(A, config.inference.decay_threshold)
    seed = replication_seed(config.master_seed, rep_index)
    rec = ReplicationRecord(rep_index, seed)
    inf = replace(config.inference, draws=config.bootstrap_draws, alpha=config.alpha)
    stage = "simulate"
    try:
        sample = simulate(A, config.innovation, config.n, seed=seed)
        stage = "fit"
        res = fit(sample, inf, *decay)
        stage = "bootstrap"
        report = simultaneous_test(res.estimate, null_matrix(config, A), res.covariance,
                                   config.bootstrap_draws, config.alpha, seed)
    except (VarInferError, np.linalg.LinAlgError, ArithmeticError) as exc:
        rec.failed, rec.stage, rec.error = True, stage, f"{type(exc).__name__}: {exc}"
        return rec
    # the intervals share the test's draws (same seed, same stream)
    ci_alpha = config.ci_alpha or config.alpha
    rec.statistic = report.statistic
    rec.c_alpha = report.critical_value
    rec.reject = report.reject_global
    rec.c_ci = critical_value(report.w_draws, ci_alpha)
    half = rec.c_ci / math.sqrt(res.estimate.n)
    rec.covered = bool(np.all(np.abs(res.estimate.beta_check - A) <= half))
    rec.w_draws = report.w_draws
    return rec


def _run_chunk(args):
    config, indices = args
    A = config.transition()
    decay = spectral_decay_index(A, config.inference.decay_threshold)
    return [run_replication(config, r, A, decay) for r in indices]


def run_experiment(config, workers=1):
    """All replications of ``config``, returned in index order."""
    config.validate()
    idx = list(range(config.replications))
    if workers <= 1 or len(idx) < 2:
        return _run_chunk((config, idx))
    chunks = [idx[w::workers] for w in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_chunk, [(config, c) for c in chunks]))
    out = [rec for part in parts for rec in part]
    out.sort(key=lambda r: r.rep_index)
    return out


def qq_data(statistics, w_pool):
    """Paired quantiles at ``q_i = (i - 0.5)/R`` for ``i = 1..R``."""
    stats = np.asarray(statistics, dtype=float).ravel()
    pool = np.asarray(w_pool, dtype=float).ravel()
    if stats.size == 0 or pool.size == 0:
        raise EmptyInput("qq data needs nonempty statistics and bootstrap pool")
    q = (np.arange(1, stats.size + 1) - 0.5) / stats.size
    return list(zip(np.quantile(stats, q).tolist(), np.quantile(pool, q).tolist()))


def summarize(config, records):
    ok = [r for r in records if not r.failed]
    k = len(ok)
    return {
        "label": config.label,
        "design": config.design,
        "innovation": config.innovation.family,
        "df": config.innovation.df,
        "n": config.n,
        "p": config.p,
        "replications": len(records),
        "alpha": config.alpha,
        "ci_alpha": config.ci_alpha or config.alpha,
        "size": sum(r.reject for r in ok) / k if k else math.nan,
        "coverage": sum(r.covered for r in ok) / k if k else math.nan,
        "mean_c_alpha": float(np.mean([r.c_alpha for r in ok])) if k else math.nan,
        "failures": len(records) - k,
    }


def size_coverage_table(configs, workers=1, results=None):
    """One summary row per config; ``results`` may carry precomputed record lists."""
    rows = []
    for i, cfg in enumerate(configs):
        cfg.validate()
        recs = results[i] if results is not None else run_experiment(cfg, workers)
        rows.append(summarize(cfg, recs))
    return rows


TABLE_COLUMNS = ["label", "design", "innovation", "df", "n", "p", "replications", "alpha", "ci_alpha",
                 "size", "coverage", "mean_c_alpha", "failures"]


def write_table(rows, path):
    from .io import fmt

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for row in rows:
            w.writerow([fmt(row[c]) if isinstance(row[c], float) else row[c] for c in TABLE_COLUMNS])


def study_grid(replications=100, draws=1000, master_seed=0, inference=None, n=30, p=10):
    """Banded and block-diagonal designs with t(5) and t(10) innovations."""
    inference = inference or InferenceConfig()
    grid = []
    for design in ("banded", "block_diagonal"):
        for df in (5, 10):
            grid.append(ExperimentConfig(
                design=design, n=n, p=p, innovation=InnovationSpec("student_t", df=float(df)),
                replications=replications, bootstrap_draws=draws, master_seed=master_seed,
                inference=inference))
    return grid
