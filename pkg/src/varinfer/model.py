"""VAR(1) processes: stability diagnostics, simulation and exact moments.

The process is ``X_i = A X_{i-1} + eps_i`` with i.i.d. symmetric innovations.
Lag-``d`` models are handled by stacking them into companion form.
"""
from dataclasses import dataclass, field
import math

import numpy as np
import scipy.linalg

from . import rng as _rng
from .errors import CapExceeded, DimensionMismatch, NonSquare, NumericalFailure, Overflow, Unstable

OVERFLOW_GUARD = 1e12
DEFAULT_DECAY_THRESHOLD = 0.5


def _as_square(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericalFailure("matrix has non-finite entries")
    return A


def _matrix_norm(M, norm):
    if norm in ("inf", np.inf):
        return float(np.abs(M).sum(axis=1).max())
    if norm in (2, "2", "spectral"):
        return float(np.linalg.norm(M, 2))
    raise ValueError(f"unknown matrix norm {norm!r}")


def spectral_radius(A):
    """Largest eigenvalue modulus of a square matrix."""
    A = _as_square(A)
    if A.size == 0:
        return 0.0
    try:
        eig = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigensolver failed: {exc}") from exc
    return float(np.max(np.abs(eig)))


def spectral_decay_index(A, threshold=DEFAULT_DECAY_THRESHOLD, norm="inf", cap=None):
    """Smallest ``t >= 1`` with ``||A^t|| < threshold``, and the matching gamma.

    Parameters
    ----------
    A : (p, p) array
        Stable transition matrix.
    threshold : float
        Decay level in (0, 1).
    norm : {"inf", "spectral"}
        Matrix norm used for the decay test. ``gamma`` always uses the
        spectral norm.
    cap : int, optional
        Iteration cap, default ``10 * p``.

    Returns
    -------
    tau : int
    gamma : float
        ``max_{0 <= t < tau} ||A^t||_2``; at least 1 because of ``t = 0``.
    """
    A = _as_square(A)
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    rho = spectral_radius(A)
    if rho >= 1:
        raise Unstable(rho)
    p = A.shape[0]
    cap = 10 * p if cap is None else int(cap)
    gamma = 1.0
    power = A.copy()
    trace = []
    for t in range(1, cap + 1):
        size = _matrix_norm(power, norm)
        trace.append(size)
        if size < threshold:
            return t, gamma
        gamma = max(gamma, float(np.linalg.norm(power, 2)))
        power = power @ A
    raise CapExceeded(cap, trace)


def companion_form(lags):
    """Stack VAR(d) coefficient blocks into the ``dp x dp`` companion matrix."""
    lags = [np.asarray(L, dtype=float) for L in lags]
    if not lags:
        raise DimensionMismatch("need at least one lag matrix")
    p = lags[0].shape[0]
    for L in lags:
        if L.shape != (p, p):
            raise DimensionMismatch(f"lag blocks must all be {p}x{p}, got {L.shape}")
    d = len(lags)
    if d == 1:
        return lags[0].copy()
    C = np.zeros((d * p, d * p))
    C[:p, :] = np.hstack(lags)
    C[p:, :-p] = np.eye((d - 1) * p)
    return C


@dataclass(frozen=True)
class TransitionMatrix:
    entries: np.ndarray
    spectral_radius: float
    decay_index: int
    decay_gamma: float
    decay_threshold: float = DEFAULT_DECAY_THRESHOLD

    @classmethod
    def from_array(cls, A, threshold=DEFAULT_DECAY_THRESHOLD, norm="inf"):
        A = _as_square(A)
        tau, gamma = spectral_decay_index(A, threshold, norm=norm)
        return cls(A.copy(), spectral_radius(A), tau, gamma, threshold)

    @property
    def p(self):
        return self.entries.shape[0]


FAMILIES = ("gaussian", "student_t", "laplace")


@dataclass(frozen=True)
class InnovationSpec:
    """Symmetric innovation law.

    ``scale`` multiplies a standard draw; it may be a scalar or one value
    per coordinate. Student-t draws are left unstandardized unless
    ``standardize`` is set, in which case they have variance ``scale**2``.
    """

    family: str = "gaussian"
    df: float = None
    scale: object = 1.0
    standardize: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown innovation family {self.family!r}; choose from {FAMILIES}")
        if self.family == "student_t":
            if self.df is None or not self.df > 2:
                raise ValueError("student_t innovations need df > 2 (finite variance)")
        if np.any(np.asarray(self.scale, dtype=float) < 0):
            raise ValueError("innovation scale must be nonnegative")

    def draw(self, gen, size):
        n, p = size
        scale = np.broadcast_to(np.asarray(self.scale, dtype=float), (p,))
        if self.family == "gaussian":
            z = gen.standard_normal(size)
        elif self.family == "student_t":
            z = gen.standard_t(self.df, size)
            if self.standardize:
                z *= math.sqrt((self.df - 2.0) / self.df)
        else:
            z = gen.laplace(0.0, 1.0, size)
            if self.standardize:
                z /= math.sqrt(2.0)
        return z * scale

    def is_degenerate(self):
        return bool(np.all(np.asarray(self.scale, dtype=float) == 0))

    def to_dict(self):
        scale = np.asarray(self.scale, dtype=float)
        return {
            "family": self.family,
            "df": self.df,
            "scale": scale.tolist(),
            "standardize": self.standardize,
        }


@dataclass(frozen=True)
class VarSample:
    """Observed path ``X_0, ..., X_n`` stored as an ``(n+1, p)`` array."""

    series: np.ndarray
    innovation: InnovationSpec = field(default_factory=InnovationSpec)
    seed: int = None
    burn_in: int = 0

    def __post_init__(self):
        s = np.asarray(self.series, dtype=float)
        if s.ndim != 2 or s.shape[0] < 2:
            raise DimensionMismatch(f"series must be (n+1, p) with n >= 1, got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise NumericalFailure("series has non-finite entries")
        object.__setattr__(self, "series", s)

    @property
    def n(self):
        return self.series.shape[0] - 1

    @property
    def p(self):
        return self.series.shape[1]

    @property
    def regressors(self):
        """``X_0, ..., X_{n-1}`` (the lagged values)."""
        return self.series[:-1]

    @property
    def responses(self):
        """``X_1, ..., X_n``."""
        return self.series[1:]


def default_burn_in(A, n, threshold=DEFAULT_DECAY_THRESHOLD, floor=200):
    """Steps until ``||A^b||_inf < 1e-8``, capped at ``10 tau ceil(log n)``, at least ``floor``."""
    A = _as_square(A)
    tau, _ = spectral_decay_index(A, threshold)
    cap = 10 * tau * max(1, math.ceil(math.log(max(n, 2))))
    power = np.eye(A.shape[0])
    b = cap
    for t in range(1, cap + 1):
        power = power @ A
        if _matrix_norm(power, "inf") < 1e-8:
            b = t
            break
    return max(floor, min(b, cap))


def simulate(A, innovation, n, burn_in=None, seed=0):
    """Simulate a stationary VAR(1) path.

    Starts from ``X = 0`` and runs ``burn_in + n + 1`` steps, keeping the
    last ``n + 1`` states.
    """
    if isinstance(A, TransitionMatrix):
        A = A.entries
    A = _as_square(A)
    rho = spectral_radius(A)
    if rho >= 1:
        raise Unstable(rho)
    if n < 1:
        raise ValueError("n must be positive")
    if burn_in is None:
        burn_in = default_burn_in(A, n)
    p = A.shape[0]
    steps = burn_in + n + 1
    gen = _rng.substream(seed, _rng.SIMULATE)
    eps = innovation.draw(gen, (steps, p))
    X = np.zeros((steps, p))
    prev = np.zeros(p)
    At = A.T
    for i in range(steps):
        prev = prev @ At + eps[i]
        X[i] = prev
    if not np.all(np.abs(X) <= OVERFLOW_GUARD):
        raise Overflow(f"state magnitude exceeded {OVERFLOW_GUARD:g}")
    return VarSample(X[burn_in:], innovation, seed, burn_in)


def stationary_autocov(A, sigma_eps):
    """Lag-0 autocovariance solving ``G = A G A^T + Sigma_eps``."""
    A = _as_square(A)
    sigma_eps = np.asarray(sigma_eps, dtype=float)
    if sigma_eps.shape != A.shape:
        raise DimensionMismatch("sigma_eps must match A")
    rho = spectral_radius(A)
    if rho >= 1:
        raise Unstable(rho)
    G = scipy.linalg.solve_discrete_lyapunov(A, sigma_eps)
    return (G + G.T) / 2
