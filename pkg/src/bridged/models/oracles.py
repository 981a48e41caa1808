"""Profile-likelihood models whose marginal kernels are known in closed form.

Regression with a profiled variance gives a multivariate t kernel; a
factor model with profiled factors gives a Gaussian kernel. Both serve as
oracles for the samplers and for the predictive machinery.
"""
import math

import numpy as np

from bridged.errors import DecompositionError, InvalidInputError
from bridged.inner import InnerSolution
from bridged.models.base import IDENTITY, SOFTPLUS, BridgedModel, ParamVector
from bridged.models.priors import Flat, InvGamma
from bridged.numerics import cholesky, cholesky_solve


# -- regression with profiled variance ---------------------------------------------

def t_regression_zhat(lam, y, X, v):
    """Profiled variance (v + RSS) / (v + n + 2)."""
    r = y - X @ np.asarray(lam, dtype=float)
    return (v + float(r @ r)) / (v + y.shape[0] + 2.0)


def _t_loglik(z, rss, n, v):
    return -(n + v + 2.0) / 2.0 * math.log(z) - (rss + v) / (2.0 * z)


def t_regression_oracle(lam, y, X, v):
    """(profile log kernel, closed-form multivariate-t log kernel) at ``lam``.

    Their difference does not depend on ``lam``.
    """
    if not v > 0:
        raise InvalidInputError("v must be positive")
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    n = y.shape[0]
    r = y - X @ np.asarray(lam, dtype=float)
    rss = float(r @ r)
    z = (v + rss) / (v + n + 2.0)
    profile = _t_loglik(z, rss, n, v)
    closed = -(n + v + 2.0) / 2.0 * math.log1p(rss / v)
    return profile, closed


class TRegressionModel(BridgedModel):
    """Linear regression coefficients with the noise variance profiled out."""

    def __init__(self, y, X, v, priors=None):
        self.y = np.asarray(y, dtype=float)
        self.X = np.asarray(X, dtype=float)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise InvalidInputError("X must be (n, d) with n = len(y)")
        if not v > 0:
            raise InvalidInputError("v must be positive")
        self.v = float(v)
        d = self.X.shape[1]
        self.priors = list(priors) if priors is not None else [Flat()] * d
        self.params = ParamVector([f"beta{i}" for i in range(d)], [IDENTITY] * d)

    def inner_solve(self, lam, warm=None):
        r = self.y - self.X @ lam
        rss = float(r @ r)
        z = (self.v + rss) / (self.v + self.y.shape[0] + 2.0)
        ll = _t_loglik(z, rss, self.y.shape[0], self.v)
        return InnerSolution(z=np.array([z]), objective=-ll, extras={"rss": rss})

    def log_lik(self, lam, sol):
        return -sol.objective

    def grad_log_lik(self, lam, sol):
        return self.X.T @ (self.y - self.X @ lam) / float(sol.z[0])

    def default_init(self):
        return np.zeros(self.d)

    def with_observation(self, x_new, y_new):
        x_new = np.asarray(x_new, dtype=float).reshape(1, -1)
        return TRegressionModel(np.append(self.y, y_new), np.vstack([self.X, x_new]),
                                self.v, self.priors)

    def predictive_center(self, lam, sol, x_new):
        return float(np.asarray(x_new, dtype=float) @ lam)


def t_predictive_params(lam, y, X, v, x_new):
    """Location, scale and degrees of freedom of y_new given y at ``lam``.

    The kernel ratio is proportional to (v + RSS + r^2)^{-(n+v+3)/2}, a
    Student t with n + v + 2 degrees of freedom.
    """
    n = y.shape[0]
    r = y - X @ lam
    rss = float(r @ r)
    df = n + v + 2.0
    return float(np.asarray(x_new) @ lam), math.sqrt((v + rss) / df), df


# -- factor model with profiled factors -------------------------------------------

def _check_factor(G, sigma2, C, y):
    G = np.asarray(G, dtype=float)
    C = np.asarray(C, dtype=float)
    y = np.asarray(y, dtype=float)
    if not sigma2 > 0:
        raise InvalidInputError("sigma2 must be positive")
    p = C.shape[1]
    if G.shape != (p, p) or C.shape[0] != y.shape[0]:
        raise InvalidInputError("dimension mismatch between G, C and y")
    try:
        LG = cholesky(G)
    except DecompositionError as exc:
        raise InvalidInputError("G must be positive definite") from exc
    return G, C, y, LG


def factor_model_zhat(G, sigma2, y, C):
    """(C'C / sigma2 + G^{-1})^{-1} C'y / sigma2, computed without inverting G."""
    G, C, y, _ = _check_factor(G, sigma2, C, y)
    # equivalent form G C' (sigma2 I + C G C')^{-1} y
    S = sigma2 * np.eye(C.shape[0]) + C @ G @ C.T
    return G @ C.T @ cholesky_solve(S, y)


def factor_model_oracle(G, sigma2, y, C):
    """(profile log kernel, closed-form Gaussian log kernel)."""
    G, C, y, LG = _check_factor(G, sigma2, C, y)
    z = factor_model_zhat(G, sigma2, y, C)
    r = y - C @ z
    Ginv_z = cholesky_solve(G, z, factor=LG)
    profile = -float(r @ r) / (2.0 * sigma2) - 0.5 * float(z @ Ginv_z)
    S = sigma2 * np.eye(C.shape[0]) + C @ G @ C.T
    closed = -0.5 * float(y @ cholesky_solve(S, y))
    return profile, closed


class FactorModel(BridgedModel):
    """Factor model with known loading covariance ``G`` and unknown sigma^2."""

    def __init__(self, y, C, G, sigma2_prior=None):
        self.y = np.asarray(y, dtype=float)
        self.C = np.asarray(C, dtype=float)
        self.G = np.asarray(G, dtype=float)
        _check_factor(self.G, 1.0, self.C, self.y)
        self.priors = [sigma2_prior or InvGamma(2.0, 1.0)]
        self.params = ParamVector(("sigma2",), (SOFTPLUS,))

    def inner_solve(self, lam, warm=None):
        profile, _ = factor_model_oracle(self.G, float(lam[0]), self.y, self.C)
        z = factor_model_zhat(self.G, float(lam[0]), self.y, self.C)
        return InnerSolution(z=z, objective=-profile)

    def log_lik(self, lam, sol):
        return -sol.objective

    def with_observation(self, c_new, y_new):
        c_new = np.asarray(c_new, dtype=float).reshape(1, -1)
        return FactorModel(np.append(self.y, y_new), np.vstack([self.C, c_new]), self.G,
                           self.priors[0])

    def predictive_center(self, lam, sol, c_new):
        return float(np.asarray(c_new, dtype=float) @ sol.z)


def factor_predictive_moments(G, sigma2, y, C, c_new):
    """Conditional mean and variance of y_new given y under N(0, sigma2 I + C G C')."""
    S = sigma2 * np.eye(C.shape[0]) + C @ G @ C.T
    k = C @ G @ c_new
    w = cholesky_solve(S, k)
    return float(w @ y), float(sigma2 + c_new @ G @ c_new - k @ w)
