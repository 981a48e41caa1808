"""Latent quadratic exponential model for binary spatial data.

The latent field is the solution of the logistic-penalised problem solved
in :mod:`bridged.inner.lqe`; the log kernel is

    -1/2 a'Q a + sum_i [y_i z_i - log(1 + e^{z_i})] + log prior(tau, b)

with a the optimal dual vector and z = -Q a.
"""
from dataclasses import dataclass

import numpy as np

from bridged.errors import InvalidInputError
from bridged.inner import INNER_TOL, InnerSolution, dual_ascent_lqe, lqe_dual_value
from bridged.models.base import SOFTPLUS, BridgedModel, ParamVector
from bridged.models.priors import HalfNormal, InvGamma
from bridged.numerics import squared_distances, squared_exp_kernel


class LQEModel(BridgedModel):
    """Binary observations ``y`` at locations ``x`` with parameters (tau, b)."""

    def __init__(self, x, y, tau_prior=None, b_prior=None, tol=INNER_TOL):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape[0] != y.shape[0]:
            raise InvalidInputError("x and y lengths differ")
        if not np.all((y == 0) | (y == 1)):
            raise InvalidInputError("y must be binary (0/1)")
        self.x = x
        self.y = y
        self.tol = tol
        self.sq_dists = squared_distances(x)
        self.priors = [tau_prior or HalfNormal(1.0), b_prior or InvGamma(2.0, 5.0)]
        self.params = ParamVector(("tau", "b"), (SOFTPLUS, SOFTPLUS))

    @property
    def n(self):
        return self.y.shape[0]

    def cov(self, lam):
        return squared_exp_kernel(None, tau=lam[0], b=lam[1], sq_dists=self.sq_dists)

    def inner_solve(self, lam, warm=None):
        Q = self.cov(lam)
        alpha0 = None
        if warm is not None and warm.dual is not None and warm.dual.shape == self.y.shape:
            alpha0 = warm.dual
        sol = dual_ascent_lqe(self.y, Q, tol=self.tol, warm=alpha0)
        sol.extras["Q"] = Q
        return sol

    def log_lik(self, lam, sol):
        return -sol.objective

    def grad_log_lik(self, lam, sol):
        tau, b = float(lam[0]), float(lam[1])
        a = sol.dual
        Q = sol.extras["Q"]
        d_tau = 0.5 * sol.extras["quad"] / tau
        d_b = 0.5 * float(a @ ((Q * self.sq_dists) @ a)) / (2.0 * b * b)
        return np.array([d_tau, d_b])

    def default_init(self):
        return np.array([1.0, 1.0])

    # -- predictive support -------------------------------------------------------
    discrete_support = (0.0, 1.0)

    def with_observation(self, x_new, y_new):
        x_new = np.atleast_1d(np.asarray(x_new, dtype=float))
        x = self.x if self.x.ndim > 1 else self.x[:, None]
        x = np.vstack([x, x_new.reshape(1, -1)])
        if self.x.ndim == 1:
            x = x[:, 0]
        return LQEModel(x, np.append(self.y, y_new), self.priors[0], self.priors[1], self.tol)

    def extend_warm(self, sol, y_new):
        """Warm start for the model with one more observation."""
        if sol is None or sol.dual is None:
            return None
        return InnerSolution(z=np.append(sol.z, 0.0), objective=np.nan,
                             dual=np.append(sol.dual, 0.5 - float(y_new)))


def feasible_alpha_tilde(y):
    """Feasible dual point with entries -1/n where y = 1 and +1/n where y = 0."""
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    return np.where(y == 1, -1.0 / n, 1.0 / n)


@dataclass
class ProprietyReport:
    grid: np.ndarray
    dual_at_tilde: np.ndarray
    primal_min: np.ndarray
    quad_tilde: np.ndarray
    violations: int
    envelope_violations: int

    @property
    def ok(self):
        return self.violations == 0 and self.envelope_violations == 0


def propriety_dual_bound_check(model, alpha_tilde, lambda_grid, tol=1e-9):
    """Check the weak-duality envelope on a grid of (tau, b).

    For each grid point verifies g_dual(alpha_tilde) <= min g (so that
    exp(-g_dual) bounds the kernel from above) and alpha_tilde' Q alpha_tilde
    <= tau. The prior multiplies both sides equally and is omitted.
    """
    alpha_tilde = np.asarray(alpha_tilde, dtype=float)
    p = alpha_tilde + model.y
    if alpha_tilde.shape != model.y.shape or np.any(p <= 0) or np.any(p >= 1):
        raise InvalidInputError("alpha_tilde is not strictly dual feasible")
    grid = np.asarray(lambda_grid, dtype=float)
    duals, primals, quads = [], [], []
    for lam in grid:
        Q = model.cov(lam)
        duals.append(lqe_dual_value(alpha_tilde, model.y, Q))
        primals.append(dual_ascent_lqe(model.y, Q, tol=model.tol).objective)
        quads.append(float(alpha_tilde @ Q @ alpha_tilde))
    duals, primals, quads = map(np.array, (duals, primals, quads))
    scale = np.maximum(1.0, np.abs(primals))
    viol = int(np.sum(duals > primals + tol * scale))
    env = int(np.sum(quads > grid[:, 0] * (1.0 + 1e-12)))
    return ProprietyReport(grid, duals, primals, quads, viol, env)
