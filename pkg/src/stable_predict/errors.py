"""Exception types raised across the package."""


class StablePredictError(Exception):
    """Base class for all package errors."""


class EmptyRestriction(StablePredictError, ValueError):
    pass


class EmptyClass(StablePredictError, ValueError):
    pass


class BadDistribution(StablePredictError, ValueError):
    pass


class InsufficientSample(StablePredictError, ValueError):
    """Raised when a sample cannot be split as requested.

    ``condition`` names the violated sample-size requirement, if known.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class TooLarge(StablePredictError):
    """An exhaustive computation exceeded its size guard.

    ``bound`` optionally carries an analytic upper bound for the quantity
    that could not be computed exactly.
    """

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound
