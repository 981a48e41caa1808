"""Random-walk Metropolis and preconditioned MALA with inner optimisation."""
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from bridged.errors import BridgedError, InvalidInputError
from bridged.numerics import cholesky, make_rng

BLOCK = 100


@dataclass
class AdaptationConfig:
    """Robbins-Monro tuning of the random-walk half-widths.

    The log of a common scale is nudged by t^{-decay} (accept - target)
    during the first ``window`` iterations. Halfway through the window the
    per-coordinate shape is reset to the empirical spread of the raw chain
    over the second quarter of the window, and the gain sequence restarts.
    The scale is then frozen at its average over the last quarter.
    """

    target: float = 0.30
    window: Optional[int] = None
    fraction: float = 0.20
    decay: float = 0.7
    step: Optional[np.ndarray] = None
    initial_step: float = 0.2
    reshape: bool = True

    def resolve(self, iters, burn_in, d):
        window = self.window
        if window is None:
            window = int(self.fraction * iters)
        window = max(0, min(window, burn_in))
        step = np.full(d, self.initial_step) if self.step is None else np.array(
            self.step, dtype=float)
        if step.shape != (d,) or np.any(step <= 0):
            raise InvalidInputError("step must be a positive vector of length d")
        return window, step


@dataclass
class ChainState:
    """Current raw point with its cached kernel and inner solution."""

    raw: np.ndarray
    log_target: float
    sol: object
    rng: np.random.Generator


@dataclass
class Trace:
    """Post-burn-in native-scale draws and per-iteration bookkeeping."""

    names: list
    samples: np.ndarray
    accept: np.ndarray
    inner_iterations: np.ndarray
    block_times: np.ndarray
    step: np.ndarray
    window: int
    failures: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def acceptance(self):
        """Acceptance rate over the post-adaptation iterations."""
        post = self.accept[self.window:]
        return float(post.mean()) if post.size else float(self.accept.mean())

    @property
    def wall_time(self):
        return float(np.sum(self.block_times))

    def column(self, name):
        return self.samples[:, self.names.index(name)]

    def to_csv(self, path):
        """Header line then one row per kept draw, full precision."""
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(self.names) + "\n")
            for row in self.samples:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _record_block(times, t0, it):
    if it % BLOCK == 0:
        now = time.perf_counter()
        times.append(now - t0[0])
        t0[0] = now


def _finish_blocks(times, t0, iters):
    if iters % BLOCK:
        times.append(time.perf_counter() - t0[0])
    return np.array(times)


def rw_metropolis(model, init, iters, burn_in, adapt=None, seed=0, warm_start=True,
                  kernel_log=None):
    """Adaptive random-walk Metropolis in raw coordinates.

    Proposals are uniform on [raw - s, raw + s] per coordinate. A proposal
    whose inner solve fails is rejected and counted.

    Parameters
    ----------
    model : BridgedModel
    init : native-scale starting point
    iters, burn_in : int
        Total iterations and how many leading draws to drop.
    adapt : AdaptationConfig, optional
    seed : int or Generator
    warm_start : bool
        Start each inner solve from the current solution.
    kernel_log : list, optional
        If given, the current log target is appended every iteration.

    Returns
    -------
    Trace
    """
    if not iters > burn_in >= 0:
        raise InvalidInputError("need iters > burn_in >= 0")
    adapt = adapt or AdaptationConfig()
    rng = make_rng(seed)
    d = model.d
    window, step = adapt.resolve(iters, burn_in, d)
    raw = model.params.to_raw(np.asarray(init, dtype=float))
    cur, sol = model.log_target(raw)
    if not np.isfinite(cur):
        raise InvalidInputError("initial point has zero posterior density")
    state = ChainState(raw, cur, sol, rng)

    log_scale = 0.0
    shape = step.copy()
    clock = 0                           # iteration at which the gain sequence (re)started
    tail_from = window - window // 4    # average the log scale from here on
    tail_sum = 0.0
    draws = np.empty((iters - burn_in, d))
    accept = np.zeros(iters, dtype=bool)
    inner_it = np.zeros(iters, dtype=np.int64)
    history = np.empty((window, d)) if adapt.reshape and window >= 20 else None
    failures = 0
    times, t0 = [], [time.perf_counter()]
    for it in range(iters):
        s = math.exp(log_scale) * shape
        prop = state.raw + s * rng.uniform(-1.0, 1.0, d)
        try:
            new, new_sol = model.log_target(prop, state.sol if warm_start else None)
            inner_it[it] = getattr(new_sol, "iterations", 0)
            ok = np.isfinite(new) and math.log(rng.random()) < new - state.log_target
        except BridgedError:
            failures += 1
            ok = False
        if ok:
            state.raw, state.log_target, state.sol = prop, new, new_sol
            accept[it] = True
        if it < window:
            log_scale += (it - clock + 1) ** (-adapt.decay) * (float(ok) - adapt.target)
            if history is not None:
                history[it] = state.raw
                if it + 1 == window // 2:
                    sd = history[window // 4: it + 1].std(axis=0)
                    if np.all(sd > 0):
                        # keep the current overall size, take the shape from the chain
                        cur_size = math.exp(log_scale) * float(np.exp(np.mean(np.log(shape))))
                        shape = sd / float(np.exp(np.mean(np.log(sd))))
                        log_scale = math.log(cur_size)
                        clock = it + 1
            if it >= tail_from:
                tail_sum += log_scale
                if it + 1 == window:
                    log_scale = tail_sum / (window - tail_from)
        if it >= burn_in:
            draws[it - burn_in] = model.params.to_native(state.raw)
        if kernel_log is not None:
            kernel_log.append(state.log_target)
        _record_block(times, t0, it + 1)
    return Trace(
        names=list(model.params.names), samples=draws, accept=accept,
        inner_iterations=inner_it, block_times=_finish_blocks(times, t0, iters),
        step=math.exp(log_scale) * shape, window=window, failures=failures,
    )


def mala(model, init, iters, burn_in, tau=0.5, M=None, seed=0, warm_start=True):
    """Preconditioned Metropolis-adjusted Langevin in raw coordinates.

    Proposal N(x + tau M grad, 2 tau M) with the gradient from the envelope
    theorem; the acceptance ratio includes both proposal densities.
    """
    if not iters > burn_in >= 0:
        raise InvalidInputError("need iters > burn_in >= 0")
    if not tau > 0:
        raise InvalidInputError("tau must be positive")
    rng = make_rng(seed)
    d = model.d
    M = np.eye(d) if M is None else np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = np.diag(M)
    LM = cholesky(M)
    Minv = np.linalg.inv(M)

    def drift(x, sol):
        return x + tau * (M @ model.grad_log_target(x, sol))

    def log_q(to, mean):
        r = to - mean
        return -float(r @ Minv @ r) / (4.0 * tau)

    raw = model.params.to_raw(np.asarray(init, dtype=float))
    cur, sol = model.log_target(raw)
    mu = drift(raw, sol)
    draws = np.empty((iters - burn_in, d))
    accept = np.zeros(iters, dtype=bool)
    inner_it = np.zeros(iters, dtype=np.int64)
    failures = 0
    times, t0 = [], [time.perf_counter()]
    for it in range(iters):
        prop = mu + math.sqrt(2.0 * tau) * (LM @ rng.standard_normal(d))
        try:
            new, new_sol = model.log_target(prop, sol if warm_start else None)
            inner_it[it] = getattr(new_sol, "iterations", 0)
            ok = False
            if np.isfinite(new):
                mu_new = drift(prop, new_sol)
                log_r = new + log_q(raw, mu_new) - cur - log_q(prop, mu)
                ok = math.log(rng.random()) < log_r
        except BridgedError:
            failures += 1
            ok = False
        if ok:
            raw, cur, sol, mu = prop, new, new_sol, mu_new
            accept[it] = True
        if it >= burn_in:
            draws[it - burn_in] = model.params.to_native(raw)
        _record_block(times, t0, it + 1)
    return Trace(
        names=list(model.params.names), samples=draws, accept=accept,
        inner_iterations=inner_it, block_times=_finish_blocks(times, t0, iters),
        step=np.full(d, tau), window=0, failures=failures,
    )
