"""Exception types shared across the package."""


class BridgedError(Exception):
    """Base class for all package errors."""


class InvalidInputError(BridgedError, ValueError):
    """Arguments violate a documented precondition."""


class DecompositionError(BridgedError, ArithmeticError):
    """A Cholesky factorisation met a non-positive pivot.

    ``pivot`` is the zero-based index of the first failing column.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class ConvergenceError(BridgedError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ConfigError(BridgedError, ValueError):
    """Malformed experiment configuration."""
