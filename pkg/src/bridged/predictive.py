"""Posterior predictive simulation for bridged models.

For a fixed parameter draw the predictive kernel of one new observation is
the likelihood ratio L(y_{1:n+1}, z_{n+1}) / L(y_{1:n}, z_n), each side at
its own inner solution. Several new points are drawn one at a time, each
solve warm-started from the previous one.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from bridged.errors import InvalidInputError
from bridged.numerics import make_rng

THIN = 10
INFLATION = 1.2
MAX_DOUBLINGS = 8
MAX_PROPOSALS = 100_000


@dataclass
class PredictiveDraw:
    """New observations drawn under one posterior sample."""

    values: np.ndarray
    rejections: np.ndarray
    sample_index: int
    probabilities: list = field(default_factory=list)


def _extend(model, sol, x_new, y_new):
    nxt = model.with_observation(x_new, y_new)
    warm = model.extend_warm(sol, y_new) if hasattr(model, "extend_warm") else None
    return nxt, warm


def discrete_step(model, lam, sol, x_new):
    """Normalised predictive probabilities over ``model.discrete_support``.

    Returns (probabilities, [(next model, next solution) per value]).
    """
    base = model.log_lik(lam, sol)
    logs, states = [], []
    for v in model.discrete_support:
        nxt, warm = _extend(model, sol, x_new, v)
        s = nxt.inner_solve(lam, warm)
        logs.append(nxt.log_lik(lam, s) - base)
        states.append((nxt, s))
    logs = np.array(logs)
    p = np.exp(logs - logs.max())
    return p / p.sum(), states


class _RatioKernel:
    """log of the one-step predictive ratio as a function of the new value."""

    def __init__(self, model, lam, sol, x_new):
        self.model, self.lam, self.sol, self.x_new = model, lam, sol, x_new
        self.base = model.log_lik(lam, sol)

    def __call__(self, v):
        nxt, warm = _extend(self.model, self.sol, self.x_new, v)
        s = nxt.inner_solve(self.lam, warm)
        return nxt.log_lik(self.lam, s) - self.base, nxt, s


def continuous_step(model, lam, sol, x_new, rng, inflation=INFLATION):
    """Rejection draw of one continuous new value.

    The envelope is Gaussian at the model's predictive centre with standard
    deviation ``inflation`` times the curvature scale of the log ratio. The
    bound M is set from the ratio at the centre and a few probe points; an
    accepted proposal whose ratio exceeds the envelope doubles the width and
    restarts.
    """
    f = _RatioKernel(model, lam, sol, x_new)
    c = float(model.predictive_center(lam, sol, x_new))
    f0 = f(c)[0]
    h = 1e-3 * max(1.0, abs(c))
    curv = (f(c + h)[0] - 2.0 * f0 + f(c - h)[0]) / (h * h)
    if not curv < 0:
        raise InvalidInputError("predictive ratio is not log-concave at its centre")
    scale = inflation / math.sqrt(-curv)
    rejections = 0
    for _ in range(MAX_DOUBLINGS):
        # log M >= max (log f - log q) over probes; q unnormalised N(c, scale^2)
        probes = c + scale * np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
        logM = max(f(p)[0] + 0.5 * ((p - c) / scale) ** 2 for p in probes)
        violated = False
        for _ in range(MAX_PROPOSALS):
            v = c + scale * rng.standard_normal()
            lf, nxt, s = f(v)
            log_env = logM - 0.5 * ((v - c) / scale) ** 2
            if lf > log_env + 1e-12:
                violated = True
                break
            if math.log(rng.random()) < lf - log_env:
                return v, rejections, nxt, s
            rejections += 1
        if not violated:
            break
        scale *= 2.0
    raise InvalidInputError("rejection envelope could not be made to dominate the ratio")


def sequential_predict(model, trace, new_inputs, k=None, rng=None, thin=THIN):
    """Draw k new observations for every ``thin``-th posterior sample.

    Parameters
    ----------
    model : BridgedModel with ``with_observation``; discrete models expose
        ``discrete_support``, continuous ones ``predictive_center``
    trace : Trace or (draws, d) array of native parameters
    new_inputs : sequence of k covariate vectors or locations
    k : number of steps (defaults to ``len(new_inputs)``)
    rng : seed or Generator
    thin : use every ``thin``-th draw

    Returns
    -------
    list of PredictiveDraw
    """
    samples = np.asarray(getattr(trace, "samples", trace), dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    k = len(new_inputs) if k is None else int(k)
    if k > len(new_inputs):
        raise InvalidInputError("k exceeds the number of new inputs")
    if thin < 1:
        raise InvalidInputError("thin must be a positive integer")
    rng = make_rng(rng if rng is not None else 0)
    discrete = hasattr(model, "discrete_support")
    out = []
    for idx in range(0, samples.shape[0], thin):
        lam = samples[idx]
        cur = model
        sol = cur.inner_solve(lam)
        values = np.empty(k)
        rej = np.zeros(k, dtype=np.int64)
        probs = []
        for j in range(k):
            if discrete:
                p, states = discrete_step(cur, lam, sol, new_inputs[j])
                pick = int(np.searchsorted(np.cumsum(p), rng.random(), side="right"))
                pick = min(pick, p.size - 1)
                values[j] = cur.discrete_support[pick]
                cur, sol = states[pick]
                probs.append(p)
            else:
                values[j], rej[j], cur, sol = continuous_step(cur, lam, sol, new_inputs[j], rng)
        out.append(PredictiveDraw(values, rej, idx, probs))
    return out


def bmmc_predict_probs(trace, points=None):
    """Posterior mean of the {-1, +1} -> {0, 1} imputed labels per point.

    ``trace`` holds lambda in the first column and imputed labels after it,
    as recorded by the label-imputation Gibbs sampler.
    """
    samples = np.asarray(getattr(trace, "samples", trace), dtype=float)
    labels = samples[:, 1:]
    if points is not None:
        labels = labels[:, np.asarray(points)]
    return (labels.mean(axis=0) + 1.0) / 2.0


__all__ = [
    "PredictiveDraw",
    "bmmc_predict_probs",
    "continuous_step",
    "discrete_step",
    "sequential_predict",
]
