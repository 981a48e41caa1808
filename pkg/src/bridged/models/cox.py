"""Proportional hazards with a profiled piecewise-constant baseline hazard."""
import numpy as np

from bridged.inner import cox_profile_hazard
from bridged.models.base import IDENTITY, BridgedModel, ParamVector
from bridged.models.priors import Normal


class CoxModel(BridgedModel):
    """Regression coefficient ``lambda`` with N(0, 5^2) prior by default."""

    def __init__(self, times, x, boundaries, prior=None):
        self.times = np.asarray(times, dtype=float)
        self.x = np.asarray(x, dtype=float)
        self.boundaries = np.asarray(boundaries, dtype=float)
        self.priors = [prior or Normal(0.0, 5.0)]
        self.params = ParamVector(("lambda",), (IDENTITY,))
        # validates the data once
        cox_profile_hazard(self.times, self.x, 0.0, self.boundaries)

    def inner_solve(self, lam, warm=None):
        return cox_profile_hazard(self.times, self.x, float(lam[0]), self.boundaries)

    def log_lik(self, lam, sol):
        return sol.extras["loglik"]

    def grad_log_lik(self, lam, sol):
        # d/d lambda at fixed rates: sum x_i - sum_i x_i e^{lambda x_i} sum_j r_j E_ij
        cum = sol.extras["exposure"] @ sol.z
        return np.array([float(self.x.sum() - np.sum(self.x * sol.extras["weights"] * cum))])

    def default_init(self):
        return np.zeros(1)
