"""Regression mixture model: densities, posteriors, likelihoods and entropy."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .basis import BasisSpec, InvalidInputError, curve_designs, design_matrix

LOG_2PI = np.log(2.0 * np.pi)
VARIANCE_FLOOR = 1e-12


class InvalidParameterError(ValueError):
    """Raised when mixture parameters are outside their domain."""


@dataclass
class CurveSet:
    """n curves observed on m points each. A shared grid is stored broadcast."""

    x: np.ndarray
    y: np.ndarray
    true_labels: Optional[np.ndarray] = None
    curve_ids: Optional[List[str]] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 2:
            raise InvalidInputError("y must be an (n, m) matrix")
        n, m = y.shape
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = np.broadcast_to(x, (n, x.size))
        if x.shape != y.shape:
            raise InvalidInputError(f"x shape {x.shape} does not match y shape {y.shape}")
        if n < 1 or m < 2:
            raise InvalidInputError("need n >= 1 curves with m >= 2 points")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidInputError("curve data contains non-finite values")
        self.x, self.y = x, y
        if self.true_labels is not None:
            labels = np.asarray(self.true_labels, dtype=int)
            if labels.shape != (n,):
                raise InvalidInputError("true_labels must have length n")
            self.true_labels = labels
        if self.curve_ids is None:
            self.curve_ids = [str(i + 1) for i in range(n)]
        elif len(self.curve_ids) != n:
            raise InvalidInputError("curve_ids must have length n")

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def m(self) -> int:
        return self.y.shape[1]

    @property
    def shared_grid(self) -> bool:
        return bool(np.all(self.x == self.x[0]))

    def designs(self, basis: BasisSpec) -> np.ndarray:
        return curve_designs(basis, self.x)


@dataclass
class MixtureParams:
    pi: np.ndarray
    beta: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self):
        self.pi = np.asarray(self.pi, dtype=float)
        self.beta = np.atleast_2d(np.asarray(self.beta, dtype=float))
        self.sigma2 = np.asarray(self.sigma2, dtype=float)
        K = self.pi.size
        if K < 1 or self.beta.shape[0] != K or self.sigma2.shape != (K,):
            raise InvalidParameterError("pi, beta and sigma2 disagree on K")
        if np.any(self.pi < 0) or abs(self.pi.sum() - 1.0) > 1e-10:
            raise InvalidParameterError("pi must be non-negative and sum to 1")
        if np.any(~(self.sigma2 > 0)):
            raise InvalidParameterError("sigma2 must be positive")
        if not np.all(np.isfinite(self.beta)):
            raise InvalidParameterError("beta contains non-finite values")

    @property
    def K(self) -> int:
        return self.pi.size

    def copy(self) -> "MixtureParams":
        return MixtureParams(self.pi.copy(), self.beta.copy(), self.sigma2.copy())


@dataclass
class TraceRecord:
    iteration: int
    K: int
    lam: float
    loglik: float
    penalized_loglik: float
    pi: np.ndarray
    note: str = ""


@dataclass
class FitTrace:
    records: List[TraceRecord] = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        if self.records and record.iteration <= self.records[-1].iteration:
            raise ValueError("trace iterations must increase")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def warnings(self) -> List[str]:
        return [f"iter {r.iteration}: {r.note}" for r in self.records if r.note]


@dataclass
class FitResult:
    params: MixtureParams
    tau: np.ndarray
    labels: np.ndarray
    trace: FitTrace
    converged: bool
    n_iter: int
    basis: BasisSpec
    engine: str

    @property
    def K(self) -> int:
        return self.params.K


def squared_residuals(y: np.ndarray, X: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """(n, K) matrix of ||y_i - X_i beta_k||^2."""
    pred = np.einsum("imd,kd->ikm", X, beta)
    return np.sum((y[:, None, :] - pred) ** 2, axis=2)


def log_component_density(y_i, X, beta_k, sigma2_k: float) -> float:
    """log N(y_i; X beta_k, sigma2_k I_m)."""
    if not sigma2_k > 0:
        raise InvalidParameterError("sigma2 must be positive")
    y_i = np.asarray(y_i, dtype=float)
    X = getattr(X, "values", X)
    r = y_i - np.asarray(X) @ np.asarray(beta_k, dtype=float)
    m = y_i.size
    return float(-0.5 * m * (LOG_2PI + np.log(sigma2_k)) - r @ r / (2.0 * sigma2_k))


def log_densities(params: MixtureParams, y: np.ndarray, X: np.ndarray) -> np.ndarray:
    """(n, K) matrix of log N(y_i; X_i beta_k, sigma2_k I)."""
    m = y.shape[1]
    sq = squared_residuals(y, X, params.beta)
    return -0.5 * m * (LOG_2PI + np.log(params.sigma2))[None, :] - sq / (2.0 * params.sigma2)


def _weighted_log_densities(params, data: CurveSet, X) -> np.ndarray:
    if np.any(np.isnan(params.beta)) or np.any(np.isnan(params.sigma2)):
        raise InvalidInputError("NaN in mixture parameters")
    with np.errstate(divide="ignore"):
        log_pi = np.log(params.pi)
    return log_densities(params, data.y, X) + log_pi[None, :]


def posterior_probabilities(params: MixtureParams, data: CurveSet, X) -> np.ndarray:
    """n x K posterior membership probabilities computed in log space."""
    lw = _weighted_log_densities(params, data, X)
    return np.exp(lw - logsumexp(lw, axis=1, keepdims=True))


def observed_log_likelihood(params: MixtureParams, data: CurveSet, X) -> float:
    lw = _weighted_log_densities(params, data, X)
    return float(np.sum(logsumexp(lw, axis=1)))


def proportions_entropy(pi, n: int) -> float:
    """-n * sum_k pi_k log pi_k, with 0 log 0 = 0."""
    pi = np.asarray(pi, dtype=float)
    if np.any(pi < 0):
        raise InvalidParameterError("proportions must be non-negative")
    nz = pi[pi > 0]
    return float(-n * np.sum(nz * np.log(nz)))


def penalized_log_likelihood(params: MixtureParams, data: CurveSet, X, lam: float) -> float:
    if lam < 0:
        raise InvalidParameterError("lambda must be non-negative")
    ll = observed_log_likelihood(params, data, X)
    if lam == 0:
        return ll
    return ll - lam * proportions_entropy(params.pi, data.n)


def map_partition(tau) -> np.ndarray:
    """1-based labels of the highest-posterior cluster; ties go to the lowest index."""
    return np.argmax(np.asarray(tau), axis=1) + 1


def max_posterior(tau) -> np.ndarray:
    return np.max(np.asarray(tau), axis=1)


def mean_curves(params: MixtureParams, basis: BasisSpec, grid: Sequence[float],
                bounds=None) -> np.ndarray:
    """(len(grid), K) table of X(grid) @ beta_k."""
    X = design_matrix(basis, np.asarray(grid, dtype=float), bounds=bounds).values
    return X @ params.beta.T
