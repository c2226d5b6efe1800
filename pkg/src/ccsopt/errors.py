"""Shared exception types.

Everything raised on purpose by this package derives from CcsoptError so
callers can catch one base class at the CLI boundary.
"""


class CcsoptError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(CcsoptError):
    """Array arguments disagree in shape or dimensionality."""


class ShapeMismatch(CcsoptError):
    """A container field has the wrong shape for the requested operation."""


class NotPositiveDefinite(CcsoptError):
    """Matrix factorization failed even after the jitter escalation."""


class EmptyInput(CcsoptError):
    """An operation that needs at least one element got none."""


class NonFiniteElbo(CcsoptError):
    """Variational objective became NaN or infinite during optimization."""


class ObjectiveCountUnsupported(CcsoptError):
    """Hypervolume routines support 2 to 4 objectives only."""


class UnknownBenchmark(CcsoptError):
    """Benchmark name not in the registry."""


class ConfigError(CcsoptError):
    """Bad experiment configuration (unknown key, missing value, bad type)."""
