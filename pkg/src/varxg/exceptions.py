"""Exception types raised across the package."""


class VarxError(Exception):
    """Base class for errors raised by this package."""


class NotPositiveDefiniteError(VarxError):
    """A matrix that must be symmetric positive definite is not.

    Typically means the predictor correlation matrix is singular (too few
    valid samples, or collinear predictors) and regularization is needed.
    """

    def __init__(self, message, smallest_pivot=None):
        super().__init__(message)
        self.smallest_pivot = smallest_pivot


class NoValidSamplesError(VarxError):
    """No time step has a complete, non-missing lag history."""


class AllMissingChannelError(VarxError):
    """A channel contains no observed values at all."""


class InsufficientDataError(VarxError):
    """Fewer valid samples than predictors with no regularization."""


class SimulationDivergedError(VarxError):
    """The simulated recursion exceeded the divergence threshold."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class NoConvergenceError(VarxError):
    """An iterative routine hit its iteration cap before converging."""

    def __init__(self, message, last_estimate=None):
        super().__init__(message)
        self.last_estimate = last_estimate


class DebiasUnavailableError(VarxError):
    """The de-biasing correction cannot be computed (singular raw Rxx)."""
