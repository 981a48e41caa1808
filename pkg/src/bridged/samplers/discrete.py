"""Gibbs sweeps over models with discrete and continuous blocks."""
import time
from types import SimpleNamespace

import numpy as np

from bridged.errors import InvalidInputError
from bridged.numerics import make_rng
from bridged.samplers.core import BLOCK, AdaptationConfig, Trace


def discrete_gibbs(model, sweeps, burn_in=0, seed=0, adapt=None, **init_kwargs):
    """Run ``sweeps`` full sweeps of a model exposing the Gibbs protocol.

    The model provides ``init_state(rng, **kw)``, ``n_discrete``,
    ``discrete_conditional(state, j, rng)``, ``continuous_step(state, rng,
    adapt)``, ``record(state)`` and ``record_names()``. Each sweep updates
    every discrete coordinate in turn, then the continuous block.
    """
    if not sweeps > burn_in >= 0:
        raise InvalidInputError("need sweeps > burn_in >= 0")
    rng = make_rng(seed)
    adapt = adapt or AdaptationConfig()
    window, _ = adapt.resolve(sweeps, burn_in, 1)
    schedule = SimpleNamespace(window=window, decay=adapt.decay, target=adapt.target)
    state = model.init_state(rng, **init_kwargs)
    names = model.record_names()
    draws = np.empty((sweeps - burn_in, len(names)))
    accept = np.zeros(sweeps, dtype=bool)
    times, t0 = [], time.perf_counter()
    for it in range(sweeps):
        for j in range(model.n_discrete):
            model.discrete_conditional(state, j, rng)
        accept[it] = bool(model.continuous_step(state, rng, schedule))
        if it >= burn_in:
            draws[it - burn_in] = model.record(state)
        if (it + 1) % BLOCK == 0:
            now = time.perf_counter()
            times.append(now - t0)
            t0 = now
    if sweeps % BLOCK:
        times.append(time.perf_counter() - t0)
    return Trace(
        names=names, samples=draws, accept=accept,
        inner_iterations=np.zeros(sweeps, dtype=np.int64), block_times=np.array(times),
        step=np.atleast_1d(getattr(state, "step", np.nan)).astype(float), window=window,
        failures=int(getattr(state, "failures", 0)),
    )
