class FracControlError(Exception):
    """Base class for every error raised by fracctl."""


class InputError(FracControlError, ValueError):
    """
    Malformed or inconsistent input.

    Parameters
        message: str
            Human readable diagnostic
        field: str
            Name of the offending field, if there is one
    """
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DomainError(InputError):
    """Argument outside the mathematical domain of an operation."""


class NotControllableError(FracControlError):
    """
    The Kalman rank test or the Gramian nonsingularity test failed.

    Parameters
        rank: int
            Rank of the Kalman block matrix (None when not computed)
        min_eigenvalue: float
            Smallest Gramian eigenvalue (None when not computed)
        max_eigenvalue: float
            Largest Gramian eigenvalue (None when not computed)
    """
    def __init__(self, message, rank=None, min_eigenvalue=None, max_eigenvalue=None):
        super().__init__(message)
        self.rank = rank
        self.min_eigenvalue = min_eigenvalue
        self.max_eigenvalue = max_eigenvalue


class TruncationError(FracControlError):
    """Peano-Baker series did not reach its tolerance within the depth cap."""
    def __init__(self, message, depth=None, tail_bound=None):
        super().__init__(message)
        self.depth = depth
        self.tail_bound = tail_bound


class ConvergenceError(FracControlError):
    """
    An iteration or implicit step failed to produce a solution; carries
    the synthesis report when there is one.
    """
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ArtifactIOError(FracControlError, OSError):
    """An artifact could not be read or written."""
    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path
