"""Bayesian maximum-margin classifier for partially labelled data.

The joint kernel over the regularisation weight and the imputed labels of
the unlabelled points is

    exp{-lambda/2 ||z_w||^2 - sum_i hinge(z, y_i)} * Gamma(lambda; 3, 2),

with z the soft-margin SVM solution on all points under the current
labels. The discrete labels are treated as an unnormalised joint kernel.
"""
import itertools
import math

import numpy as np
from scipy.integrate import trapezoid

from bridged.errors import BridgedError, InvalidInputError
from bridged.inner import INNER_TOL, InnerSolution, svm_dual_solve
from bridged.models.base import IDENTITY, SOFTPLUS, BridgedModel, ParamVector
from bridged.models.priors import Gamma, Normal


class BMMCState:
    """Mutable chain state: raw lambda, full label vector and cached solve."""

    def __init__(self, raw, labels, logk, sol):
        self.raw = float(raw)
        self.labels = labels
        self.logk = logk
        self.sol = sol
        self.step = 1.0
        self.iteration = 0
        self.accepted = 0
        self.failures = 0


class BMMCModel(BridgedModel):
    """Partially labelled soft-margin classifier.

    Parameters
    ----------
    X : (m, p) features for all points
    labels : (m,) array with entries -1, +1 for labelled points; entries at
        ``unlabeled`` are ignored.
    unlabeled : indices of unlabelled points
    """

    def __init__(self, X, labels, unlabeled, prior=None, tol=INNER_TOL):
        self.X = np.asarray(X, dtype=float)
        labels = np.asarray(labels, dtype=float).copy()
        self.unlabeled = np.asarray(unlabeled, dtype=np.int64)
        m = self.X.shape[0]
        if labels.shape != (m,):
            raise InvalidInputError("labels must have one entry per row of X")
        mask = np.ones(m, dtype=bool)
        mask[self.unlabeled] = False
        if not np.all(np.isin(labels[mask], (-1.0, 1.0))):
            raise InvalidInputError("observed labels must be -1 or +1")
        labels[~mask] = 1.0
        self.labels = labels
        self.labeled = np.flatnonzero(mask)
        self.tol = tol
        self.gram = self.X @ self.X.T
        self.priors = [prior or Gamma(3.0, 2.0)]
        self.params = ParamVector(("lambda",), (SOFTPLUS,))

    def full_labels(self, imputed):
        y = self.labels.copy()
        y[self.unlabeled] = imputed
        return y

    def solve(self, lam, y, warm=None):
        alpha0 = warm.dual if warm is not None else None
        return svm_dual_solve(self.X, y, float(lam), warm=alpha0, tol=self.tol,
                              gram=self.gram)

    def kernel(self, lam, y, warm=None):
        """(log kernel, solution) at weight ``lam`` and full labels ``y``."""
        sol = self.solve(lam, y, warm)
        return -sol.objective + self.priors[0].logpdf(float(lam)), sol

    # BridgedModel view with the current labels as data
    def inner_solve(self, lam, warm=None):
        return self.solve(lam[0], self.labels, warm)

    def log_lik(self, lam, sol):
        return -sol.objective

    # -- discrete Gibbs protocol ---------------------------------------------------
    def init_state(self, rng, lam0=1.0, imputed=None):
        if imputed is None:
            imputed = np.where(rng.random(self.unlabeled.size) < 0.5, -1.0, 1.0)
        y = self.full_labels(imputed)
        logk, sol = self.kernel(lam0, y)
        return BMMCState(self.params.to_raw([lam0])[0], y, logk, sol)

    @property
    def n_discrete(self):
        return int(self.unlabeled.size)

    def discrete_conditional(self, state, j, rng):
        """Resample imputed label ``j`` from its exact two-point conditional."""
        i = self.unlabeled[j]
        lam = float(self.params.to_native([state.raw])[0])
        y_flip = state.labels.copy()
        y_flip[i] = -y_flip[i]
        try:
            logk_flip, sol_flip = self.kernel(lam, y_flip, warm=state.sol)
        except BridgedError:
            state.failures += 1
            return
        # P(flip) = e^{k_flip} / (e^{k_cur} + e^{k_flip})
        p_flip = 1.0 / (1.0 + math.exp(min(700.0, state.logk - logk_flip)))
        if rng.random() < p_flip:
            state.labels, state.logk, state.sol = y_flip, logk_flip, sol_flip

    def continuous_step(self, state, rng, adapt=None):
        """Random-walk Metropolis on raw lambda given the labels."""
        prop = state.raw + state.step * rng.uniform(-1.0, 1.0)
        lam = float(self.params.to_native([prop])[0])
        accept = False
        try:
            logk, sol = self.kernel(lam, state.labels, warm=state.sol)
            cur = state.logk + self.params.log_jacobian([state.raw])
            new = logk + self.params.log_jacobian([prop])
            accept = math.log(rng.random()) < new - cur
        except BridgedError:
            state.failures += 1
        if accept:
            state.raw, state.logk, state.sol = prop, logk, sol
            state.accepted += 1
        state.iteration += 1
        if adapt is not None and state.iteration <= adapt.window:
            state.step *= math.exp(state.iteration ** (-adapt.decay)
                                   * (float(accept) - adapt.target))
        return accept

    def record(self, state):
        lam = float(self.params.to_native([state.raw])[0])
        return np.concatenate([[lam], state.labels[self.unlabeled]])

    def record_names(self):
        return ["lambda"] + [f"y{i}" for i in self.unlabeled]

    # -- exact enumeration ------------------------------------------------------
    def exact_probs(self, n_grid=200, lam_range=(1e-2, 30.0)):
        """P(y_j = 1) for every unlabelled point by summing over all labelings.

        Lambda is integrated out by the trapezoid rule on a log grid. The
        Gamma(3, 2) prior puts about 1e-6 mass below the default lower end.
        """
        k = self.unlabeled.size
        if k > 12:
            raise InvalidInputError("enumeration limited to 12 unlabelled points")
        u = np.linspace(math.log(lam_range[0]), math.log(lam_range[1]), n_grid)
        lams = np.exp(u)
        logw = []
        combos = list(itertools.product((-1.0, 1.0), repeat=k))
        for combo in combos:
            y = self.full_labels(np.array(combo))
            vals = np.empty(n_grid)
            sol = None
            for g, lam in enumerate(lams):
                val, sol = self.kernel(lam, y, warm=sol)
                vals[g] = val + u[g]      # d lambda = lambda du
            mx = vals.max()
            integ = np.exp(vals - mx)
            logw.append(mx + math.log(trapezoid(integ, u)))
        logw = np.array(logw)
        w = np.exp(logw - logw.max())
        w /= w.sum()
        labels = (np.array(combos) + 1.0) / 2.0
        return w @ labels


class GibbsHingeModel(BridgedModel):
    """Gibbs posterior on (w, b, lambda) from the labelled hinge loss only.

    Kernel: exp{-lambda/2 ||w||^2 - sum_labelled hinge} N(w; 0, 9 I)
    N(b; 0, 9) Gamma(lambda; 3, 2). Unlabelled points do not enter.
    """

    def __init__(self, X, labels, labeled, sd=3.0, lam_prior=None):
        self.X = np.asarray(X, dtype=float)
        self.labels = np.asarray(labels, dtype=float)
        self.labeled = np.asarray(labeled, dtype=np.int64)
        p = self.X.shape[1]
        self.priors = [Normal(0.0, sd)] * (p + 1) + [lam_prior or Gamma(3.0, 2.0)]
        self.params = ParamVector([f"w{i}" for i in range(p)] + ["b", "lambda"],
                                  [IDENTITY] * (p + 1) + [SOFTPLUS])
        self._Xl = self.X[self.labeled]
        self._yl = self.labels[self.labeled]

    def inner_solve(self, lam, warm=None):
        return InnerSolution(z=np.zeros(0), objective=0.0)

    def log_lik(self, lam, sol):
        w, b, reg = lam[:-2], lam[-2], lam[-1]
        hinge = np.maximum(0.0, 1.0 - self._yl * (self._Xl @ w + b))
        return -0.5 * reg * float(w @ w) - float(hinge.sum())

    def default_init(self):
        return np.concatenate([np.zeros(self.X.shape[1] + 1), [1.0]])

    def predict_probs(self, samples, points):
        """Average over draws of P(y = 1) proportional to exp(-hinge)."""
        Xp = self.X[np.asarray(points)]
        f = Xp @ samples[:, :-2].T + samples[:, -2]
        h_pos = np.maximum(0.0, 1.0 - f)
        h_neg = np.maximum(0.0, 1.0 + f)
        p = 1.0 / (1.0 + np.exp(h_pos - h_neg))
        return p.mean(axis=1)
