"""Exception hierarchy shared by the numeric modules."""


class FinlapError(Exception):
    """Base class for every failure raised by this package."""


class NumericFailure(FinlapError):
    """A computation could not deliver a result within its stated guarantees."""


class PrecisionExhausted(NumericFailure):
    """Cancellation consumed more bits than the precision policy allows.

    ``depth_bits`` is the observed cancellation depth in bits; callers retry
    with a larger mantissa.
    """

    def __init__(self, message, depth_bits=None):
        super().__init__(message)
        self.depth_bits = depth_bits


class CannotMeetTolerance(NumericFailure):
    pass


class ToleranceNotMet(NumericFailure):
    pass


class SearchExhausted(NumericFailure):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class SignLost(NumericFailure):
    pass


class MarginCheckFailed(FinlapError):
    """A certificate no longer matches the series it is checked against."""
