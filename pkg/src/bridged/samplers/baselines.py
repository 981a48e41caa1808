"""Data-augmentation Gibbs samplers used as comparison baselines."""
import math
import time

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from bridged.errors import DecompositionError, InvalidInputError
from bridged.inner.cox import _validate, event_counts, exposure_matrix
from bridged.models.base import SOFTPLUS, ParamVector
from bridged.models.priors import Gamma, HalfNormal, InvGamma, Normal
from bridged.numerics import (
    chol_logdet,
    cholesky,
    make_rng,
    polya_gamma_sample,
    squared_distances,
)
from bridged.samplers.core import BLOCK, AdaptationConfig, Trace

NUGGET = 1e-6


class _Scale:
    """Robbins-Monro scalar step for a one-block random walk."""

    def __init__(self, adapt, iters, burn_in, d):
        self.window, self.shape = adapt.resolve(iters, burn_in, d)
        self.adapt = adapt
        self.log_scale = 0.0
        self.tail_from = self.window - self.window // 4
        self.tail_sum = 0.0

    @property
    def step(self):
        return math.exp(self.log_scale) * self.shape

    def update(self, it, accepted):
        if it < self.window:
            self.log_scale += (it + 1) ** (-self.adapt.decay) * (
                float(accepted) - self.adapt.target)
            if it >= self.tail_from:
                # freeze at the average over the last quarter of the window
                self.tail_sum += self.log_scale
                if it + 1 == self.window:
                    self.log_scale = self.tail_sum / (self.window - self.tail_from)


class _Timer:
    def __init__(self):
        self.times = []
        self.t0 = time.perf_counter()

    def tick(self, it):
        if it % BLOCK == 0:
            now = time.perf_counter()
            self.times.append(now - self.t0)
            self.t0 = now

    def finish(self, iters):
        if iters % BLOCK:
            self.times.append(time.perf_counter() - self.t0)
        return np.array(self.times)


def draw_latent(Q, L, eta, kappa, rng):
    """Draw zeta ~ N(S kappa, S) with S = (Q^{-1} + diag eta)^{-1}.

    Matheron's rule: a prior draw f = L e is corrected toward the
    pseudo-data kappa / eta, so Q is never inverted. ``L`` is the lower
    Cholesky factor of ``Q``.
    """
    n = kappa.shape[0]
    sq = np.sqrt(eta)
    f = L @ rng.standard_normal(n)
    B = np.eye(n) + sq[:, None] * Q * sq[None, :]
    LB = cholesky(B)
    r = kappa / sq - sq * f - rng.standard_normal(n)
    v = cho_solve((LB, True), r, check_finite=False)
    return f + Q @ (sq * v)


def gibbs_latent_normal(x, y, iters, burn_in, seed=0, adapt=None, tau_prior=None,
                        b_prior=None, init=(1.0, 1.0)):
    """Polya-Gamma Gibbs sampler for a latent Gaussian logistic model.

    zeta ~ N(0, Q), Q = tau (K_b + nugget I), y_i ~ Bernoulli(sigmoid(zeta_i)).
    One iteration draws eta | zeta (Polya-Gamma), zeta | eta, Q (Gaussian,
    precision Q^{-1} + diag eta) and then (tau, b) | zeta by one adaptive
    random-walk step in softplus coordinates.
    """
    if not iters > burn_in >= 0:
        raise InvalidInputError("need iters > burn_in >= 0")
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    rng = make_rng(seed)
    d2 = squared_distances(np.asarray(x, dtype=float))
    priors = [tau_prior or HalfNormal(1.0), b_prior or InvGamma(2.0, 5.0)]
    params = ParamVector(("tau", "b"), (SOFTPLUS, SOFTPLUS))
    kappa = y - 0.5
    eye = np.eye(n)

    def factor(lam):
        Q = lam[0] * (np.exp(-d2 / (2.0 * lam[1])) + NUGGET * eye)
        return Q, cholesky(Q)

    def log_cond(raw, L, zeta):
        lam = params.to_native(raw)
        lp = sum(p.logpdf(float(v)) for p, v in zip(priors, lam))
        if lp == -np.inf:
            return -np.inf
        u = solve_triangular(L, zeta, lower=True, check_finite=False)
        return -0.5 * chol_logdet(L) - 0.5 * float(u @ u) + lp + params.log_jacobian(raw)

    raw = params.to_raw(np.asarray(init, dtype=float))
    Q, L = factor(params.to_native(raw))
    zeta = np.zeros(n)
    cur = log_cond(raw, L, zeta)
    scale = _Scale(adapt or AdaptationConfig(), iters, burn_in, 2)
    draws = np.empty((iters - burn_in, 2))
    accept = np.zeros(iters, dtype=bool)
    failures = 0
    timer = _Timer()
    for it in range(iters):
        eta = polya_gamma_sample(zeta, rng)
        zeta = draw_latent(Q, L, eta, kappa, rng)
        cur = log_cond(raw, L, zeta)
        prop = raw + scale.step * rng.uniform(-1.0, 1.0, 2)
        ok = False
        try:
            Qp, Lp = factor(params.to_native(prop))
            new = log_cond(prop, Lp, zeta)
            ok = np.isfinite(new) and math.log(rng.random()) < new - cur
        except DecompositionError:
            failures += 1
        if ok:
            raw, Q, L, cur = prop, Qp, Lp, new
            accept[it] = True
        scale.update(it, ok)
        if it >= burn_in:
            draws[it - burn_in] = params.to_native(raw)
        timer.tick(it + 1)
    return Trace(
        names=["tau", "b"], samples=draws, accept=accept,
        inner_iterations=np.zeros(iters, dtype=np.int64), block_times=timer.finish(iters),
        step=scale.step, window=scale.window, failures=failures,
        extras={"zeta": zeta},
    )


def canonical_cox_gibbs(times, x, boundaries, iters, burn_in, seed=0, adapt=None,
                        prior=None, rate_prior=None):
    """Gibbs sampler for the Cox model with Gamma(1, 1) priors on the rates.

    Rates are drawn from their Gamma(1 + d_j, 1 + W_j(lambda)) conditionals
    and lambda by one adaptive random-walk step.
    """
    if not iters > burn_in >= 0:
        raise InvalidInputError("need iters > burn_in >= 0")
    t, xv, e = _validate(times, x, boundaries)
    rng = make_rng(seed)
    prior = prior or Normal(0.0, 5.0)
    rate_prior = rate_prior or Gamma(1.0, 1.0)
    E = exposure_matrix(t, e)
    d = event_counts(t, e)
    sx = float(xv.sum())
    K = d.size

    def log_cond(lam, rates):
        return lam * sx - float(np.exp(lam * xv) @ (E @ rates)) + prior.logpdf(lam)

    lam = 0.0
    scale = _Scale(adapt or AdaptationConfig(initial_step=0.1), iters, burn_in, 1)
    draws = np.empty((iters - burn_in, 1 + K))
    accept = np.zeros(iters, dtype=bool)
    timer = _Timer()
    for it in range(iters):
        W = np.exp(lam * xv) @ E
        rates = rng.gamma(rate_prior.shape + d) / (rate_prior.rate + W)
        cur = log_cond(lam, rates)
        prop = lam + float(scale.step[0]) * rng.uniform(-1.0, 1.0)
        ok = math.log(rng.random()) < log_cond(prop, rates) - cur
        if ok:
            lam = prop
            accept[it] = True
        scale.update(it, ok)
        if it >= burn_in:
            draws[it - burn_in, 0] = lam
            draws[it - burn_in, 1:] = rates
        timer.tick(it + 1)
    return Trace(
        names=["lambda"] + [f"r{j}" for j in range(K)], samples=draws, accept=accept,
        inner_iterations=np.zeros(iters, dtype=np.int64), block_times=timer.finish(iters),
        step=scale.step, window=scale.window,
    )
