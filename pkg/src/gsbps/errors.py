"""Exception types shared across the package."""


class GsbpsError(Exception):
    """Base class for every error raised by this package."""


class InvalidDimensionError(GsbpsError, ValueError):
    """A dimension argument (basis size, penalty order vs. size) is unusable."""


class InvalidDomainError(GsbpsError, ValueError):
    """A support interval is empty or reversed."""


class OutOfSupportError(GsbpsError, ValueError):
    """An evaluation point lies outside the basis support."""


class InvalidParameterError(GsbpsError, ValueError):
    """A scalar parameter violates its constraint (sign, range, membership)."""


class DataValidationError(GsbpsError, ValueError):
    """Observed data fails a structural check; message names the offending row."""


class UnsupportedOperationError(GsbpsError, TypeError):
    """The operation does not apply to this model."""


class NumericFailureError(GsbpsError, ArithmeticError):
    """A numeric evaluation produced a non-finite or overflowing value.

    ``abscissa`` carries the offending evaluation point when known.
    """

    def __init__(self, message, abscissa=None):
        super().__init__(message)
        self.abscissa = abscissa


class ConvergenceFailureError(NumericFailureError):
    """An iterative scheme hit its iteration cap before meeting tolerance."""


class InitializationFailureError(GsbpsError):
    """A sampler could not be initialized (mis-declared target, singular system)."""


class SamplerStallError(NumericFailureError):
    """The rejection loop exceeded its rejection budget."""


class EnvelopeError(NumericFailureError):
    """The piecewise-exponential envelope has non-finite mass."""


class UnboundedTargetError(NumericFailureError):
    """The grid-grower never reached the tail-decay threshold."""


class ChainAbortError(GsbpsError):
    """A sub-sampler failed mid-chain.

    Carries the iteration index, the coordinate being updated, and a snapshot
    of the model state at failure time.
    """

    def __init__(self, message, iteration, coordinate, state):
        super().__init__(message)
        self.iteration = iteration
        self.coordinate = coordinate
        self.state = state
