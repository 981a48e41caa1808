"""Profiled piecewise-constant baseline hazard for proportional hazards.

With rate r_j on interval [e_j, e_{j+1}) the log-likelihood of uncensored
event times t_i and covariates x_i is

    sum_i lambda x_i + sum_j d_j log r_j - sum_j r_j W_j,
    W_j = sum_i exp(lambda x_i) E_ij,

where d_j counts events in interval j and E_ij is subject i's exposure time
there. The maximiser is r_j = d_j / W_j.
"""
import numpy as np
from scipy.special import xlogy

from bridged.errors import InvalidInputError
from bridged.inner import InnerSolution


def _validate(times, covariates, boundaries):
    t = np.asarray(times, dtype=float)
    x = np.asarray(covariates, dtype=float)
    e = np.asarray(boundaries, dtype=float)
    if t.ndim != 1 or x.shape != t.shape:
        raise InvalidInputError("times and covariates must be vectors of equal length")
    if t.size == 0:
        raise InvalidInputError("no observations")
    if not np.all(np.isfinite(t)) or np.any(t <= 0):
        raise InvalidInputError("times must be finite and positive")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("covariates must be finite")
    if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) <= 0):
        raise InvalidInputError("boundaries must be strictly increasing with at least 2 edges")
    if e[0] > 0 or t.max() >= e[-1]:
        raise InvalidInputError("boundaries must cover the observed times")
    return t, x, e


def exposure_matrix(times, boundaries):
    """E_ij: time subject i spends in interval j."""
    t = np.asarray(times, dtype=float)[:, None]
    e = np.asarray(boundaries, dtype=float)
    return np.clip(np.minimum(t, e[1:]) - e[:-1], 0.0, None)


def event_counts(times, boundaries):
    e = np.asarray(boundaries, dtype=float)
    idx = np.searchsorted(e, times, side="right") - 1
    return np.bincount(idx, minlength=e.size - 1).astype(float)


def cox_loglik(rates, times, covariates, lam, boundaries):
    """Log-likelihood at arbitrary rates (for probing the profile)."""
    t, x, e = _validate(times, covariates, boundaries)
    r = np.asarray(rates, dtype=float)
    W = np.exp(lam * x) @ exposure_matrix(t, e)
    d = event_counts(t, e)
    if np.any((r <= 0) & (d > 0)):
        return -np.inf
    return float(lam * x.sum() + np.sum(xlogy(d, r)) - np.sum(r * W))


def cox_profile_hazard(times, covariates, lam, boundaries):
    """Profile out the interval rates at regression coefficient ``lam``.

    Intervals without exposure get rate 0 and are listed in
    ``extras["zero_exposure"]``; if one of them holds an event the profile
    log-likelihood is ``-inf``.

    Returns
    -------
    InnerSolution
        ``z`` holds the rates; ``objective`` is minus the profile
        log-likelihood and ``extras["loglik"]`` the log-likelihood itself.
    """
    t, x, e = _validate(times, covariates, boundaries)
    lam = float(lam)
    E = exposure_matrix(t, e)
    d = event_counts(t, e)
    weights = np.exp(lam * x)
    W = weights @ E
    zero = W <= 0.0
    rates = np.where(zero, 0.0, d / np.where(zero, 1.0, W))
    if np.any(zero & (d > 0)):
        loglik = -np.inf
    else:
        loglik = float(lam * x.sum() + np.sum(xlogy(d, rates)) - d.sum())
    return InnerSolution(
        z=rates, objective=-loglik, iterations=0, residual=0.0,
        extras={"loglik": loglik, "events": d, "exposure": E, "weights": weights,
                "zero_exposure": np.flatnonzero(zero)},
    )
