"""Exception types raised across the package.

Numerical failures derive from :class:`NumericalError` so the CLI can map
them to a distinct exit code; bad arguments derive from ``ValueError``.
"""


class NumericalError(ArithmeticError):
    """A computation hit a numerical dead end (non-PD matrix, no window...)."""


class NotPositiveDefinite(NumericalError):
    pass


class NonFinite(NumericalError):
    pass


class WindowFailure(NumericalError):
    pass


class UnboundedTarget(NumericalError):
    pass


class DimensionMismatch(ValueError):
    pass


class InvalidParameter(ValueError):
    pass


class BadInit(ValueError):
    pass


class IdenticalPair(BadInit):
    pass


class DegenerateChain(ValueError):
    pass


class ConstantSeries(ValueError):
    pass


class CensoredAboveThreshold(ValueError):
    pass


class MalformedRecord(ValueError):
    pass


class EmptyLitter(ValueError):
    pass


class ImproperPosterior(ValueError):
    pass


class ZeroDensityPoint(ValueError):
    pass
