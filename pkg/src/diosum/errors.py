"""Exception types shared across the package."""


class DiosumError(Exception):
    """Base class for all diosum errors."""


class PrecisionExhausted(DiosumError):
    """A certified decision could not be reached below the precision cap.

    Never silently classified: callers must treat this as a hard failure.
    """

    def __init__(self, message, *, index=None, bits=None):
        super().__init__(message)
        self.index = index
        self.bits = bits


class DigitsExhausted(PrecisionExhausted):
    """An explicit-digit spec ran out of digits before the request was met."""


class BlockMismatch(DiosumError):
    """N does not lie in the convergent-denominator block [q_K, q_{K+1})."""


class RationalDependence(DiosumError):
    """A nonzero integer vector appears to send the linear form to an integer."""
