"""Exception hierarchy."""


class SteadyScopeError(Exception):
    """Base class for all library errors."""


class DomainError(SteadyScopeError, ValueError):
    """An evaluation point lies outside the domain of a function."""


class ConfigError(SteadyScopeError, ValueError):
    """Invalid analysis configuration or model construction."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NumericalError(SteadyScopeError, ArithmeticError):
    """A numerical procedure failed."""


class NonConvergenceError(NumericalError):
    def __init__(self, message, last_gap=None, iterations=None):
        super().__init__(message)
        self.last_gap = last_gap
        self.iterations = iterations


class InnerSolverError(NumericalError):
    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class LocatorError(NumericalError):
    """Root scan produced more sign changes than the well-separated roots premise allows."""


class ClassificationError(SteadyScopeError):
    """A root is non-generic (zero slope) and cannot be classified."""


class PropertyViolationError(SteadyScopeError):
    """A computed object violates a structural property it must satisfy."""
