"""Univariate prior densities on the native scale, with gradients."""
import math

import numpy as np
from scipy import stats
from scipy.special import gammaln

from bridged.errors import InvalidInputError


class Prior:
    """Log density, its derivative and sampling for one coordinate."""

    support = (-np.inf, np.inf)

    def logpdf(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def sample(self, rng, size=None):
        raise NotImplementedError

    def _in_support(self, x):
        lo, hi = self.support
        return lo < x < hi


class Normal(Prior):
    def __init__(self, mean=0.0, sd=1.0):
        if sd <= 0:
            raise InvalidInputError("sd must be positive")
        self.mean, self.sd = float(mean), float(sd)

    def logpdf(self, x):
        u = (x - self.mean) / self.sd
        return -0.5 * u * u - math.log(self.sd) - 0.5 * math.log(2 * math.pi)

    def grad(self, x):
        return -(x - self.mean) / self.sd ** 2

    def sample(self, rng, size=None):
        return rng.normal(self.mean, self.sd, size)

    def __repr__(self):
        return f"Normal({self.mean:g}, {self.sd:g})"


class HalfNormal(Prior):
    """N(0, scale^2) truncated to the positive half-line."""

    support = (0.0, np.inf)

    def __init__(self, scale=1.0):
        self.scale = float(scale)

    def logpdf(self, x):
        if not x > 0:
            return -np.inf
        u = x / self.scale
        return -0.5 * u * u - math.log(self.scale) + 0.5 * math.log(2 / math.pi)

    def grad(self, x):
        return -x / self.scale ** 2

    def sample(self, rng, size=None):
        return np.abs(rng.normal(0.0, self.scale, size))

    def cdf(self, x):
        return stats.halfnorm.cdf(x, scale=self.scale)

    def __repr__(self):
        return f"HalfNormal({self.scale:g})"


class InvGamma(Prior):
    """Density b^a / Gamma(a) x^{-a-1} e^{-b/x}."""

    support = (0.0, np.inf)

    def __init__(self, a, b):
        if a <= 0 or b <= 0:
            raise InvalidInputError("InvGamma parameters must be positive")
        self.a, self.b = float(a), float(b)

    def logpdf(self, x):
        if not x > 0:
            return -np.inf
        return (self.a * math.log(self.b) - gammaln(self.a)
                - (self.a + 1) * math.log(x) - self.b / x)

    def grad(self, x):
        return -(self.a + 1) / x + self.b / x ** 2

    def sample(self, rng, size=None):
        return self.b / rng.gamma(self.a, 1.0, size)

    def cdf(self, x):
        return stats.invgamma.cdf(x, self.a, scale=self.b)

    def __repr__(self):
        return f"InvGamma({self.a:g}, {self.b:g})"


class Gamma(Prior):
    """Shape-rate parameterisation."""

    support = (0.0, np.inf)

    def __init__(self, shape, rate):
        if shape <= 0 or rate <= 0:
            raise InvalidInputError("Gamma parameters must be positive")
        self.shape, self.rate = float(shape), float(rate)

    def logpdf(self, x):
        if not x > 0:
            return -np.inf
        return (self.shape * math.log(self.rate) - gammaln(self.shape)
                + (self.shape - 1) * math.log(x) - self.rate * x)

    def grad(self, x):
        return (self.shape - 1) / x - self.rate

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, 1.0 / self.rate, size)

    def cdf(self, x):
        return stats.gamma.cdf(x, self.shape, scale=1.0 / self.rate)

    def __repr__(self):
        return f"Gamma({self.shape:g}, rate={self.rate:g})"


class Exponential(Gamma):
    def __init__(self, rate):
        super().__init__(1.0, rate)

    def __repr__(self):
        return f"Exponential({self.rate:g})"


class Flat(Prior):
    """Improper constant density; useful for oracle checks."""

    def logpdf(self, x):
        return 0.0

    def grad(self, x):
        return 0.0

    def __repr__(self):
        return "Flat()"
