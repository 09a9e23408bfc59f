"""Standard EM for regression mixtures with a fixed number of clusters."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.linalg import LinAlgWarning

from .basis import BasisSpec
from .model import (
    VARIANCE_FLOOR,
    CurveSet,
    FitResult,
    FitTrace,
    MixtureParams,
    TraceRecord,
    map_partition,
    observed_log_likelihood,
    posterior_probabilities,
)

log = logging.getLogger(__name__)

EMPTY_CLUSTER_MASS = 1e-10


@dataclass
class StandardFitConfig:
    K: int
    epsilon: float = 1e-6
    max_iter: int = 1000
    n_restarts: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 1 or self.n_restarts < 1:
            raise ValueError("max_iter and n_restarts must be >= 1")


def m_step_proportions(tau) -> np.ndarray:
    """Column means of the posterior matrix."""
    tau = np.asarray(tau, dtype=float)
    pi = tau.mean(axis=0)
    return pi / pi.sum()


def solve_normal_equations(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a symmetric PSD system, retrying with a small ridge when it is singular."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", LinAlgWarning)
            return scipy.linalg.solve(A, b, assume_a="pos")
    except (np.linalg.LinAlgError, LinAlgWarning, ValueError):
        d = A.shape[0]
        ridge = 1e-10 * np.trace(A) / d
        if not ridge > 0:
            ridge = 1e-10
        return np.linalg.lstsq(A + ridge * np.eye(d), b, rcond=None)[0]


def wls_beta_update(tau_col, data: CurveSet, X) -> np.ndarray:
    """Weighted least squares fit of one cluster's coefficients over all curves."""
    w = np.asarray(tau_col, dtype=float)
    X = np.asarray(X)
    A = np.einsum("i,imd,ime->de", w, X, X)
    b = np.einsum("i,imd,im->d", w, X, data.y)
    return solve_normal_equations(A, b)


def variance_update(tau_col, data: CurveSet, X, beta_k) -> float:
    """Weighted mean squared residual per observation, floored at 1e-12."""
    w = np.asarray(tau_col, dtype=float)
    r = data.y - np.einsum("imd,d->im", np.asarray(X), np.asarray(beta_k))
    s2 = float(w @ np.sum(r * r, axis=1) / (data.m * w.sum()))
    return max(s2, VARIANCE_FLOOR)


def update_regressions(tau: np.ndarray, data: CurveSet, X, beta_old: np.ndarray,
                       sigma2_old: np.ndarray):
    """Per-cluster beta and sigma2 updates.

    Clusters whose posterior mass is below 1e-10 keep their old parameters;
    their indices are returned so the caller can record them.
    """
    K = tau.shape[1]
    beta = beta_old.copy()
    sigma2 = sigma2_old.copy()
    stalled = []
    for k in range(K):
        if tau[:, k].sum() < EMPTY_CLUSTER_MASS:
            stalled.append(k)
            continue
        beta[k] = wls_beta_update(tau[:, k], data, X)
        sigma2[k] = variance_update(tau[:, k], data, X, beta[k])
    return beta, sigma2, stalled


def standard_em_step(params: MixtureParams, data: CurveSet, X):
    """One E-step followed by one M-step. Returns (new params, tau, stalled clusters)."""
    tau = posterior_probabilities(params, data, X)
    pi = m_step_proportions(tau)
    beta, sigma2, stalled = update_regressions(tau, data, X, params.beta, params.sigma2)
    return MixtureParams(pi, beta, sigma2), tau, stalled


def params_from_partition(labels, data: CurveSet, X, K: int) -> MixtureParams:
    """One M-step from a hard 1-based partition."""
    labels = np.asarray(labels, dtype=int)
    tau = np.zeros((data.n, K))
    tau[np.arange(data.n), labels - 1] = 1.0
    d = X.shape[2]
    beta = np.zeros((K, d))
    sigma2 = np.ones(K)
    beta, sigma2, _ = update_regressions(tau, data, X, beta, sigma2)
    # empty groups keep the placeholder beta/sigma2, so give them a tiny weight
    pi = np.maximum(m_step_proportions(tau), 1e-12)
    return MixtureParams(pi / pi.sum(), beta, sigma2)


def random_partition(n: int, K: int, rng: np.random.Generator) -> np.ndarray:
    """Random 1-based partition with every group non-empty when n >= K."""
    labels = rng.integers(1, K + 1, size=n)
    if n >= K:
        labels[rng.permutation(n)[:K]] = np.arange(1, K + 1)
    return labels


def _fit_once(data, basis, config, X, init: MixtureParams) -> FitResult:
    params = init.copy()
    trace = FitTrace()
    ll = observed_log_likelihood(params, data, X)
    trace.append(TraceRecord(0, params.K, 0.0, ll, ll, params.pi.copy()))
    converged = False
    tau = posterior_probabilities(params, data, X)
    q = 0
    for q in range(1, config.max_iter + 1):
        new, tau, stalled = standard_em_step(params, data, X)
        delta = np.max(np.linalg.norm(new.beta - params.beta, axis=1))
        params = new
        ll = observed_log_likelihood(params, data, X)
        note = f"empty clusters {[k + 1 for k in stalled]} left unchanged" if stalled else ""
        trace.append(TraceRecord(q, params.K, 0.0, ll, ll, params.pi.copy(), note))
        if delta < config.epsilon:
            converged = True
            break
    tau = posterior_probabilities(params, data, X)
    return FitResult(params, tau, map_partition(tau), trace, converged, q, basis, "standard")


def fit_standard_em(data: CurveSet, basis: BasisSpec, config: StandardFitConfig,
                    init: Optional[MixtureParams] = None) -> FitResult:
    """Fit a K-cluster regression mixture by EM.

    Without ``init`` each restart draws a random hard partition and takes one
    M-step from it; the restart with the highest final log-likelihood wins.
    """
    X = data.designs(basis)
    if init is not None:
        if init.K != config.K:
            raise ValueError("init has a different K than the config")
        return _fit_once(data, basis, config, X, init)
    rng = np.random.default_rng(config.seed)
    best = None
    for r in range(config.n_restarts):
        labels = random_partition(data.n, config.K, rng)
        start = params_from_partition(labels, data, X, config.K)
        result = _fit_once(data, basis, config, X, start)
        log.debug("restart %d: loglik %.6g", r, result.trace.records[-1].loglik)
        if best is None or result.trace.records[-1].loglik > best.trace.records[-1].loglik:
            best = result
    return best
