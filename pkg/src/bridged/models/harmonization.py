"""Harmonisation of graph Laplacians through low-rank projections.

Each subject's Laplacian L_s is projected onto a nuclear-norm ball with
weight lambda_s drawn from a 10-point grid. The kernel is

    prod_s (sigma2)^{-1/2} exp{-||L_s - Z_s||_F^2 / (2 sigma2)}
           (lambda_s / sigma2) exp{-lambda_s ||Z_s||_* / sigma2}
  * prod_s tau^{-1/2} exp{-sum_{k != s} dist^2(Z_k, Z_s) / (S - 1) / (2 tau)}

times Inverse-Gamma(2, 1) priors on sigma2 and tau. Every projection and
every pairwise distance is computed once up front.
"""
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from bridged.errors import InvalidInputError
from bridged.inner import laplacian_projection_admm
from bridged.models.priors import InvGamma
from bridged.numerics import GEODESIC_ETA, pairwise_geodesic

GRID_SIZE = 10
GRID_MAX = 5.0


def default_grid(size=GRID_SIZE, top=GRID_MAX):
    """Equally spread values in (0, top]: top/size, 2 top/size, ..., top."""
    return top * np.arange(1, size + 1) / size


@dataclass
class PrecomputedProjectionTable:
    """Projections and distances for every (subject, grid value) pair.

    ``Z[s, g]`` is the projection of subject ``s`` at ``grid[g]``,
    ``misfit[s, g]`` its squared Frobenius distance to the data,
    ``nuclear[s, g]`` its nuclear norm and ``dist[s, g, k, h]`` the geodesic
    distance between ``Z[s, g]`` and ``Z[k, h]``.
    """

    grid: np.ndarray
    Z: np.ndarray
    misfit: np.ndarray
    nuclear: np.ndarray
    dist: np.ndarray

    @property
    def n_subjects(self):
        return self.Z.shape[0]

    @property
    def n_grid(self):
        return self.grid.shape[0]

    @classmethod
    def build(cls, laplacians, grid=None, eta=GEODESIC_ETA, admm_kwargs=None):
        laplacians = np.asarray(laplacians, dtype=float)
        grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
        S, R, _ = laplacians.shape
        G = grid.shape[0]
        kw = dict(admm_kwargs or {})
        Z = np.empty((S, G, R, R))
        misfit = np.empty((S, G))
        nuc = np.empty((S, G))
        for s in range(S):
            warm = None
            for g in np.argsort(grid):
                sol = laplacian_projection_admm(laplacians[s], float(grid[g]), warm=warm, **kw)
                Z[s, g] = sol.z
                misfit[s, g] = sol.extras["misfit"]
                nuc[s, g] = sol.extras["nuclear"]
                warm = sol.extras["state"]
        flat = pairwise_geodesic(Z.reshape(S * G, R, R), eta=eta)
        return cls(grid, Z, misfit, nuc, flat.reshape(S, G, S, G))

    def distances(self, idx):
        """S x S distance matrix between the projections selected by ``idx``."""
        idx = np.asarray(idx)
        s = np.arange(self.n_subjects)
        return self.dist[s[:, None], idx[:, None], s[None, :], idx[None, :]]


class HarmonizationState:
    def __init__(self, idx, sigma2, tau):
        self.idx = np.asarray(idx, dtype=np.int64)
        self.sigma2 = float(sigma2)
        self.tau = float(tau)
        self.iteration = 0
        self.failures = 0


class HarmonizationModel:
    """Grid indices, sigma2 and tau under the kernel above.

    Updates are exact: 10-way discrete conditionals for the grid indices and
    conjugate inverse-gamma draws for sigma2 and tau.
    """

    def __init__(self, table: PrecomputedProjectionTable, sigma2_prior=None, tau_prior=None):
        self.table = table
        self.sigma2_prior = sigma2_prior or InvGamma(2.0, 1.0)
        self.tau_prior = tau_prior or InvGamma(2.0, 1.0)
        if table.n_subjects < 2:
            raise InvalidInputError("need at least two subjects")

    @property
    def S(self):
        return self.table.n_subjects

    def _check_idx(self, idx):
        idx = np.asarray(idx)
        if idx.shape != (self.S,) or np.any(idx < 0) or np.any(idx >= self.table.n_grid):
            raise InvalidInputError("grid index out of range")
        return idx.astype(np.int64)

    def fit_terms(self, idx):
        s = np.arange(self.S)
        lam = self.table.grid[idx]
        return self.table.misfit[s, idx], self.table.nuclear[s, idx], lam

    def pair_sum(self, idx):
        """Sum over unordered pairs of squared distances."""
        D = self.table.distances(idx)
        return 0.5 * float(np.sum(D * D))

    def log_kernel(self, idx, sigma2, tau):
        idx = self._check_idx(idx)
        if not (sigma2 > 0 and tau > 0):
            return -np.inf
        S = self.S
        misfit, nuc, lam = self.fit_terms(idx)
        first = (-0.5 * S * math.log(sigma2) - float(misfit.sum()) / (2 * sigma2)
                 + float(np.sum(np.log(lam))) - S * math.log(sigma2)
                 - float(np.sum(lam * nuc)) / sigma2)
        # each unordered pair appears in two per-subject terms
        second = -0.5 * S * math.log(tau) - self.pair_sum(idx) / ((S - 1) * tau)
        return first + second + self.sigma2_prior.logpdf(sigma2) + self.tau_prior.logpdf(tau)

    # -- discrete Gibbs protocol ---------------------------------------------------
    def init_state(self, rng, idx=None, sigma2=1.0, tau=1.0):
        if idx is None:
            idx = rng.integers(0, self.table.n_grid, self.S)
        return HarmonizationState(self._check_idx(idx), sigma2, tau)

    @property
    def n_discrete(self):
        return self.S

    def conditional_logits(self, state, s):
        t = self.table
        lam = t.grid
        others = np.delete(np.arange(self.S), s)
        d = t.dist[s, :, others, state.idx[others]]          # (S-1, G)
        pair = np.sum(d * d, axis=0)
        return (-t.misfit[s] / (2 * state.sigma2) + np.log(lam)
                - lam * t.nuclear[s] / state.sigma2 - pair / ((self.S - 1) * state.tau))

    def discrete_conditional(self, state, s, rng):
        logits = self.conditional_logits(state, s)
        p = np.exp(logits - logits.max())
        p /= p.sum()
        pick = int(np.searchsorted(np.cumsum(p), rng.random(), side="right"))
        state.idx[s] = min(pick, p.size - 1)

    def sigma2_conditional(self, idx):
        misfit, nuc, lam = self.fit_terms(idx)
        a = self.sigma2_prior.a + 1.5 * self.S
        b = self.sigma2_prior.b + float(np.sum(0.5 * misfit + lam * nuc))
        return a, b

    def tau_conditional(self, idx):
        a = self.tau_prior.a + 0.5 * self.S
        b = self.tau_prior.b + self.pair_sum(idx) / (self.S - 1)
        return a, b

    def continuous_step(self, state, rng, adapt=None):
        a, b = self.sigma2_conditional(state.idx)
        state.sigma2 = b / rng.gamma(a)
        a, b = self.tau_conditional(state.idx)
        state.tau = b / rng.gamma(a)
        state.iteration += 1
        return True

    def record(self, state):
        return np.concatenate([[state.sigma2, state.tau], self.table.grid[state.idx]])

    def record_names(self):
        return ["sigma2", "tau"] + [f"lambda{s}" for s in range(self.S)]

    # -- exact enumeration (small S) --------------------------------------------------
    def enumerate_grid(self):
        """Exact posterior over all grid assignments with sigma2, tau integrated out."""
        G = self.table.n_grid
        if G ** self.S > 2_000_000:
            raise InvalidInputError("too many grid assignments to enumerate")
        combos = np.array(list(itertools.product(range(G), repeat=self.S)))
        logw = np.empty(len(combos))
        for c, idx in enumerate(combos):
            _, _, lam = self.fit_terms(idx)
            a1, b1 = self.sigma2_conditional(idx)
            a2, b2 = self.tau_conditional(idx)
            logw[c] = (float(np.sum(np.log(lam))) + gammaln(a1) - a1 * math.log(b1)
                       + gammaln(a2) - a2 * math.log(b2))
        w = np.exp(logw - logw.max())
        return combos, w / w.sum()
