"""Parameter transforms and the bridged-model contract."""
from typing import Optional, Sequence

import numpy as np

from bridged.errors import InvalidInputError
from bridged.inner import InnerSolution
from bridged.numerics import log_sigmoid, sigmoid, softplus, softplus_inv

IDENTITY = "identity"
SOFTPLUS = "softplus"


class ParamVector:
    """Map between unconstrained raw coordinates and native parameters.

    Positive coordinates use softplus, so native = log(1 + e^raw) and the
    log-Jacobian of that coordinate is log sigmoid(raw).
    """

    def __init__(self, names: Sequence[str], transforms: Sequence[str]):
        if len(names) != len(transforms):
            raise InvalidInputError("names and transforms differ in length")
        for t in transforms:
            if t not in (IDENTITY, SOFTPLUS):
                raise InvalidInputError(f"unknown transform {t!r}")
        self.names = tuple(names)
        self.transforms = tuple(transforms)
        self._pos = np.array([t == SOFTPLUS for t in transforms])

    @property
    def d(self):
        return len(self.names)

    def to_native(self, raw):
        raw = np.asarray(raw, dtype=float)
        return np.where(self._pos, softplus(raw), raw)

    def to_raw(self, native):
        native = np.asarray(native, dtype=float)
        if np.any(native[..., self._pos] <= 0):
            raise InvalidInputError("softplus coordinates must be positive")
        safe = np.where(self._pos, native, 1.0)
        return np.where(self._pos, softplus_inv(safe), native)

    def log_jacobian(self, raw):
        raw = np.asarray(raw, dtype=float)
        return float(np.sum(log_sigmoid(raw[self._pos])))

    def dnative(self, raw):
        """Elementwise derivative d native / d raw."""
        raw = np.asarray(raw, dtype=float)
        return np.where(self._pos, sigmoid(raw), 1.0)

    def grad_log_jacobian(self, raw):
        raw = np.asarray(raw, dtype=float)
        return np.where(self._pos, 1.0 - sigmoid(raw), 0.0)


class BridgedModel:
    """A prior plus a likelihood evaluated at the solution of an inner problem.

    Subclasses set ``params`` and ``priors`` and implement
    :meth:`inner_solve` and :meth:`log_lik`. Gradient-based samplers further
    need :meth:`grad_log_lik`, the envelope derivative of the log
    likelihood at the fixed inner solution.
    """

    params: ParamVector
    priors: Sequence = ()

    @property
    def d(self):
        return self.params.d

    # -- contract -------------------------------------------------------------
    def log_prior(self, lam):
        return float(sum(p.logpdf(float(x)) for p, x in zip(self.priors, lam)))

    def grad_log_prior(self, lam):
        return np.array([p.grad(float(x)) for p, x in zip(self.priors, lam)])

    def inner_solve(self, lam, warm: Optional[InnerSolution] = None) -> InnerSolution:
        raise NotImplementedError

    def log_lik(self, lam, sol: InnerSolution) -> float:
        raise NotImplementedError

    def grad_log_lik(self, lam, sol: InnerSolution):
        raise NotImplementedError(f"{type(self).__name__} has no envelope gradient")

    def log_kernel(self, lam, sol: InnerSolution) -> float:
        lp = self.log_prior(lam)
        if lp == -np.inf:
            return -np.inf
        return self.log_lik(lam, sol) + lp

    # -- conveniences -----------------------------------------------------------
    def evaluate(self, lam, warm=None):
        """(log kernel, inner solution) at native ``lam``."""
        lam = np.asarray(lam, dtype=float)
        sol = self.inner_solve(lam, warm)
        return self.log_kernel(lam, sol), sol

    def log_target(self, raw, warm=None):
        """Log density in raw coordinates, including the log-Jacobian."""
        raw = np.asarray(raw, dtype=float)
        lam = self.params.to_native(raw)
        if not np.all(np.isfinite(lam)):
            raise InvalidInputError("parameter overflow")
        value, sol = self.evaluate(lam, warm)
        return value + self.params.log_jacobian(raw), sol

    def grad_log_target(self, raw, sol):
        raw = np.asarray(raw, dtype=float)
        lam = self.params.to_native(raw)
        g = envelope_subgradient(self, lam, sol)
        return g * self.params.dnative(raw) + self.params.grad_log_jacobian(raw)

    def default_init(self):
        """A starting point in the native domain."""
        return np.ones(self.d)


class PriorOnlyModel(BridgedModel):
    """Model with no data: the kernel is the prior. Used for sampler checks."""

    def __init__(self, priors, transforms=None, names=None):
        self.priors = list(priors)
        d = len(self.priors)
        names = names or [f"p{i}" for i in range(d)]
        if transforms is None:
            transforms = [SOFTPLUS if p.support[0] == 0.0 else IDENTITY for p in self.priors]
        self.params = ParamVector(names, transforms)

    def inner_solve(self, lam, warm=None):
        return InnerSolution(z=np.zeros(0), objective=0.0)

    def log_lik(self, lam, sol):
        return 0.0

    def grad_log_lik(self, lam, sol):
        return np.zeros(self.d)

    def default_init(self):
        return np.array([1.0 if p.support[0] == 0.0 else 0.0 for p in self.priors])


def envelope_subgradient(model, lam, sol=None, warm=None):
    """Gradient of the log kernel in native coordinates.

    By the envelope theorem the derivative of the profiled objective equals
    the partial derivative in ``lam`` at the fixed inner solution, so no
    differentiation through the solver is needed. At kinks each model
    returns the zero element of the subdifferential when it has one, else
    the one-sided limit from below.
    """
    lam = np.asarray(lam, dtype=float)
    if sol is None:
        sol = model.inner_solve(lam, warm)
    g = model.grad_log_lik(lam, sol)
    return np.asarray(g, dtype=float) + model.grad_log_prior(lam)
