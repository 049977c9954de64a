"""Exception types shared across the package."""


class KinklabError(Exception):
    """Base class for all package errors."""


class ConfigError(KinklabError):
    """Invalid model or run configuration (bad shapes, ranges, or keys)."""


class ConvergenceError(KinklabError):
    """Iterative solver failed to reach its tolerance.

    Carries the last iterate and its gradient norm so callers can inspect
    or restart.
    """

    def __init__(self, message, last_iterate=None, grad_norm=None, iterations=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.grad_norm = grad_norm
        self.iterations = iterations


class SaddleError(KinklabError):
    """A stationary point was found but it is not a strict minimum."""

    def __init__(self, message, positions=None, min_hessian_eig=None):
        super().__init__(message)
        self.positions = positions
        self.min_hessian_eig = min_hessian_eig


class NumericalError(KinklabError):
    """Runtime numerical failure (blow-up, non-finite values, trace drift)."""
