"""Robust EM for regression mixtures.

Starts with one cluster per curve and maximizes the log-likelihood penalized
by the entropy of the mixing proportions. The penalty weight adapts each
iteration, and clusters whose proportion falls below 1/n are discarded, so
the number of clusters is estimated during the fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .basis import BasisSpec
from .em_standard import m_step_proportions, solve_normal_equations, update_regressions
from .model import (
    VARIANCE_FLOOR,
    CurveSet,
    FitResult,
    FitTrace,
    MixtureParams,
    TraceRecord,
    map_partition,
    observed_log_likelihood,
    penalized_log_likelihood,
    posterior_probabilities,
    squared_residuals,
)


LAMBDA_FORMS = ("leading", "entropy")


@dataclass
class RobustFitConfig:
    epsilon: float = 1e-6
    max_iter: int = 1000
    lambda_cap: float = 1.0
    eta_override: Optional[float] = None
    discard_duplicates: bool = True
    lambda_form: str = "leading"

    def __post_init__(self):
        if self.lambda_form not in LAMBDA_FORMS:
            raise ValueError(f"lambda_form must be one of {LAMBDA_FORMS}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.lambda_cap <= 1:
            raise ValueError("lambda_cap must lie in (0, 1]")

    @staticmethod
    def discard_threshold(n: int) -> float:
        return 1.0 / n


def eta_default(m: int) -> float:
    return min(1.0, 0.5 ** math.floor(m / 2 - 1))


def _plogp(pi: np.ndarray) -> np.ndarray:
    out = np.zeros_like(pi)
    nz = pi > 0
    out[nz] = pi[nz] * np.log(pi[nz])
    return out


def proportions_correction(pi_old, lam: float) -> np.ndarray:
    """lam * pi_k * (log pi_k - sum_h pi_h log pi_h); zero where pi_k == 0."""
    pi_old = np.asarray(pi_old, dtype=float)
    ent = np.sum(_plogp(pi_old))
    corr = np.zeros_like(pi_old)
    nz = pi_old > 0
    corr[nz] = lam * pi_old[nz] * (np.log(pi_old[nz]) - ent)
    return corr


def robust_proportions_update(tau, pi_old, lam: float) -> np.ndarray:
    """Entropy-penalized proportions update.

    Negative entries are clamped to 0 and the vector renormalized; the
    discard rule removes such clusters afterwards.
    """
    pi = np.asarray(tau, dtype=float).mean(axis=0)
    if lam != 0:
        pi = pi + proportions_correction(pi_old, lam)
        pi = np.maximum(pi, 0.0)
    return pi / pi.sum()


def lambda_update(pi_new, pi_old, tau, eta: float, lambda_cap: float,
                  form: str = "leading") -> float:
    """Adaptive penalty weight, capped at ``lambda_cap``.

    The second bound is (1 - max_k mean tau_k) over the entropy of ``pi_old``.
    With ``form="leading"`` that entropy is also scaled by the old proportion
    of the cluster attaining the max; ``form="entropy"`` omits the scaling.
    """
    pi_new = np.asarray(pi_new, dtype=float)
    pi_old = np.asarray(pi_old, dtype=float)
    tau = np.asarray(tau, dtype=float)
    n, K = tau.shape
    a = float(np.mean(np.exp(eta * n * np.abs(pi_new - pi_old))))
    mean_tau = tau.sum(axis=0) / n
    lead = int(np.argmax(mean_tau))
    denom = -float(np.sum(_plogp(pi_old)))
    if form == "leading":
        denom *= pi_old[lead]
    elif form != "entropy":
        raise ValueError(f"unknown lambda form {form!r}")
    numer = 1.0 - float(mean_tau[lead])
    b = numer / denom if denom > 0 else math.inf
    return max(0.0, min(a, b, lambda_cap))


def duplicate_clusters(params: MixtureParams) -> np.ndarray:
    """Mask of clusters whose (beta, sigma2) exactly repeat an earlier cluster's."""
    key = np.column_stack([params.beta, params.sigma2])
    _, first = np.unique(key, axis=0, return_index=True)
    dup = np.ones(params.K, dtype=bool)
    dup[first] = False
    return dup


def discard_small_clusters(params: MixtureParams, tau, n: int, extra=None):
    """Drop clusters with proportion below 1/n, renormalizing pi and the rows of tau.

    ``extra`` is an optional boolean mask of further clusters to drop. The
    largest cluster is always kept. Returns (params, tau, kept indices).
    """
    tau = np.asarray(tau, dtype=float)
    drop = params.pi < 1.0 / n
    if extra is not None:
        drop |= extra
    keep = np.flatnonzero(~drop)
    if keep.size == 0:
        keep = np.array([int(np.argmax(params.pi))])
    pi = params.pi[keep]
    pi = pi / pi.sum()
    tau = tau[:, keep]
    rows = tau.sum(axis=1, keepdims=True)
    # rows whose mass sat entirely on removed clusters fall back to the surviving pi
    empty = rows[:, 0] <= 0
    if np.any(empty):
        tau[empty] = pi
        rows[empty] = 1.0
    tau = tau / rows
    new = MixtureParams(pi, params.beta[keep], params.sigma2[keep])
    return new, tau, keep


def initialize_robust(data: CurveSet, basis: BasisSpec, X=None):
    """One cluster per curve, each fit by OLS to its own curve.

    Every cluster's variance is the median over all curves of the mean
    squared residual against that cluster's fit. Returns (params, lambda0).
    """
    if data.n < 2:
        raise ValueError("robust EM needs at least two curves")
    if X is None:
        X = data.designs(basis)
    X = np.asarray(X)
    n = data.n
    beta = np.stack([solve_normal_equations(X[k].T @ X[k], X[k].T @ data.y[k])
                     for k in range(n)])
    sq = squared_residuals(data.y, X, beta)
    sigma2 = np.maximum(np.median(sq, axis=0) / data.m, VARIANCE_FLOOR)
    return MixtureParams(np.full(n, 1.0 / n), beta, sigma2), 0.0


@dataclass
class RobustState:
    params: MixtureParams
    lam: float
    tau: Optional[np.ndarray] = None


def robust_em_step(state: RobustState, data: CurveSet, X, eta: float, lambda_cap: float,
                   lam_override: Optional[float] = None, discard: bool = True,
                   discard_duplicates: bool = True, lambda_form: str = "leading"):
    """One pass of the robust loop.

    Exact duplicate components (possible only when curves coincide) have
    identical posteriors forever, so they are discarded together with the
    small ones and their mass passes to the surviving copy.

    Returns (new state, beta change over surviving clusters, clusters
    stalled for lack of posterior mass).
    """
    params = state.params
    n = data.n
    tau = posterior_probabilities(params, data, X)
    lam = state.lam if lam_override is None else lam_override
    pi_new = robust_proportions_update(tau, params.pi, lam)
    if lam_override is None:
        lam_next = lambda_update(pi_new, params.pi, tau, eta, lambda_cap, lambda_form)
    else:
        lam_next = lam_override
    staged = MixtureParams(pi_new, params.beta, params.sigma2)
    if discard:
        extra = duplicate_clusters(staged) if discard_duplicates else None
        staged, tau, keep = discard_small_clusters(staged, tau, n, extra)
    else:
        keep = np.arange(params.K)
    beta, sigma2, stalled = update_regressions(tau, data, X, staged.beta, staged.sigma2)
    new_params = MixtureParams(staged.pi, beta, sigma2)
    delta = float(np.max(np.linalg.norm(beta - params.beta[keep], axis=1)))
    return RobustState(new_params, lam_next, tau), delta, stalled


def fit_robust_em(data: CurveSet, basis: BasisSpec, config: Optional[RobustFitConfig] = None,
                  callback: Optional[Callable[[int, RobustState], None]] = None) -> FitResult:
    """Run the robust EM loop until the largest beta change drops below epsilon.

    ``callback(q, state)`` is invoked after every iteration. When max_iter is
    reached the last state is returned with ``converged=False``.
    """
    config = config or RobustFitConfig()
    X = data.designs(basis)
    eta = config.eta_override if config.eta_override is not None else eta_default(data.m)

    params, lam = initialize_robust(data, basis, X)
    tau = posterior_probabilities(params, data, X)
    params = MixtureParams(m_step_proportions(tau), params.beta, params.sigma2)
    state = RobustState(params, lam, tau)

    trace = FitTrace()
    ll = observed_log_likelihood(params, data, X)
    trace.append(TraceRecord(0, params.K, lam, ll, ll, params.pi.copy()))

    converged = False
    q = 0
    for q in range(1, config.max_iter + 1):
        state, delta, stalled = robust_em_step(state, data, X, eta, config.lambda_cap,
                                               discard_duplicates=config.discard_duplicates,
                                               lambda_form=config.lambda_form)
        p = state.params
        ll = observed_log_likelihood(p, data, X)
        pll = penalized_log_likelihood(p, data, X, state.lam)
        note = f"empty clusters {[k + 1 for k in stalled]} left unchanged" if stalled else ""
        trace.append(TraceRecord(q, p.K, state.lam, ll, pll, p.pi.copy(), note))
        if callback is not None:
            callback(q, state)
        if delta < config.epsilon:
            converged = True
            break

    tau = state.tau
    return FitResult(state.params, tau, map_partition(tau), trace, converged, q, basis, "robust")
