"""Exception types raised across the package."""


class RicciError(Exception):
    """Base class for all errors raised by :mod:`entropic_ricci`."""


class ChainValidationError(RicciError, ValueError):
    """A rate matrix / measure pair does not define a valid reversible chain."""


class ReducibleChain(ChainValidationError):
    pass


class DetailedBalanceViolation(ChainValidationError):
    def __init__(self, message, pair=None, residual=None):
        super().__init__(message)
        self.pair = pair
        self.residual = residual


class NegativeRate(ChainValidationError):
    pass


class DimensionMismatch(RicciError, ValueError):
    pass


class NegativeTime(RicciError, ValueError):
    pass


class NegativeArgument(RicciError, ValueError):
    pass


class BoundaryDensity(RicciError, ValueError):
    """An operation that needs a strictly positive density got a boundary one."""


class SingularWeights(RicciError, ValueError):
    pass


class NonZeroMean(RicciError, ValueError):
    pass


class OptimizerFailure(RicciError, RuntimeError):
    pass


class UnknownState(RicciError, KeyError):
    pass


class DegeneratePencil(RicciError, RuntimeError):
    pass


class StateSpaceTooLarge(RicciError, ValueError):
    pass


class InvalidEpsilon(RicciError, ValueError):
    pass


class NonPositiveDiameter(RicciError, ValueError):
    pass


class NonPositiveKappa(RicciError, ValueError):
    pass


class InvalidParams(RicciError, ValueError):
    pass


class ParseError(RicciError, ValueError):
    pass


class ValidationError(RicciError, ValueError):
    """Chain file parsed but the chain itself is invalid."""
