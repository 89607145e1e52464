"""Exception types raised across the package."""


class CharextError(Exception):
    """Base class for all package errors."""


class NotNormalizedError(CharextError, ValueError):
    pass


class SupportError(CharextError, ValueError):
    """The density's support is unsuitable (e.g. not compact)."""


class HypothesisViolation(CharextError, ValueError):
    """A sufficient-condition hypothesis required by an operation fails.

    The message names the violated inequality together with the numbers
    that violate it.
    """


class QuadratureBudgetError(CharextError, RuntimeError):
    """The configured node budget cannot resolve the requested integrand."""


class GridResolutionError(CharextError, ValueError):
    """A sampling grid is too coarse or too small for the requested checks."""

    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("grid lacks resolution: " + "; ".join(self.failures))
