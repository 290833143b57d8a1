"""Exception types shared across the package."""


class MHSError(Exception):
    """Base class for all package errors."""


class SizeMismatchError(MHSError, ValueError):
    """Two fields with different grid sizes were combined."""


class PreconditionError(MHSError, ValueError):
    """An operation was called outside its domain."""


class BreakdownError(MHSError):
    """A flow map stopped being a diffeomorphism, or a solution blew up.

    Attributes
    ----------
    t : float or None
        Time at which the breakdown was detected, when known.
    indicator : float or None
        The monitored quantity (min of the Jacobian, sup of the slope, ...).
    """

    def __init__(self, message, t=None, indicator=None):
        super().__init__(message)
        self.t = t
        self.indicator = indicator


class CFLError(MHSError, ValueError):
    """Time step exceeds the advective stability heuristic."""

    def __init__(self, message, suggested_dt):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class ResolutionError(MHSError, ValueError):
    """A harmonic does not fit below the dealiasing cutoff."""

    def __init__(self, message, harmonic):
        super().__init__(message)
        self.harmonic = harmonic


class InitSyntaxError(MHSError, ValueError):
    """Malformed initial-condition expression.

    ``offset`` is the byte offset into the source text where parsing failed.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class InsufficientDataError(MHSError, ValueError):
    """Too few usable coefficients for a decay fit."""
