"""Semantic exception hierarchy shared across the library."""


class PdtruncError(Exception):
    """Base class for every library-specific error."""


class DomainError(PdtruncError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class NonConvergence(PdtruncError, RuntimeError):
    """Quadrature could not reach the requested tolerance within its budget.

    Callers should widen the transform scale or loosen ``abs_tol``.
    """


class DegenerateNormalizer(PdtruncError, RuntimeError):
    """A Monte Carlo normalising constant is too noisy to divide by.

    Raised when the expected number of positive-definite successes falls
    below 10; raise the sample size or calibrate the scale first.
    """


class Unachievable(PdtruncError, RuntimeError):
    """A calibration target could not be bracketed."""


class BudgetExceeded(PdtruncError, RuntimeError):
    """Iteration budget exhausted before the stopping rule was met."""


class ConfigError(PdtruncError, ValueError):
    """Invalid configuration; the message carries the offending field path."""


class UnknownPreset(ConfigError):
    """Requested figure preset does not exist."""
