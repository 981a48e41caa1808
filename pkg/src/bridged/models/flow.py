"""Noisy edge-flow observations of a network operating at maximum flow.

Capacities on the uncertain edge set are parameters. The latent flows are
the (tie-broken) maximum flow under those capacities, and each of the n
replicate observations is Gaussian around them with variance sigma2.
"""
import math

import numpy as np

from bridged.errors import InvalidInputError
from bridged.inner import FlowNetwork, max_flow_solve
from bridged.models.base import SOFTPLUS, BridgedModel, ParamVector
from bridged.models.priors import Exponential, InvGamma

FLOW_RATE = 0.2


class FlowModel(BridgedModel):
    """Parameters: capacities of the uncertain edges, then sigma2."""

    def __init__(self, net: FlowNetwork, Y, rate=FLOW_RATE, sigma2_prior=None):
        Y = np.asarray(Y, dtype=float)
        if Y.ndim != 2 or Y.shape[1] != net.n_edges:
            raise InvalidInputError("observations must be (replicates, edges)")
        if net.uncertain.size == 0:
            raise InvalidInputError("network has no uncertain edges")
        self.net = net
        self.n_rep = Y.shape[0]
        # sufficient statistics: SS(z) = within + n ||ybar - z||^2
        self.ybar = Y.mean(axis=0)
        self.within = float(np.sum((Y - self.ybar) ** 2))
        k = net.uncertain.size
        self.priors = [Exponential(rate)] * k + [sigma2_prior or InvGamma(2.0, 5.0)]
        names = [f"cap{e}" for e in net.uncertain] + ["sigma2"]
        self.params = ParamVector(names, [SOFTPLUS] * (k + 1))

    def inner_solve(self, lam, warm=None):
        return max_flow_solve(self.net, lam[:-1])

    def sum_squares(self, z):
        r = self.ybar - z
        return self.within + self.n_rep * float(r @ r)

    def log_lik(self, lam, sol):
        sigma2 = float(lam[-1])
        m = self.n_rep * self.net.n_edges
        return -0.5 * m * math.log(sigma2) - self.sum_squares(sol.z) / (2.0 * sigma2)

    def default_init(self):
        caps = self.net.capacity[self.net.uncertain]
        return np.concatenate([np.where(caps > 0, caps, 1.0), [1.0]])
