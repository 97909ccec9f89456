"""Exception types shared across the package."""


class SeqcalError(Exception):
    """Base class for all package errors."""


class DomainError(SeqcalError, ValueError):
    """An argument lies outside the domain of the operation."""


class ParameterError(SeqcalError, ValueError):
    """A distribution or sequence parameter is invalid."""


class UnsupportedError(SeqcalError, ValueError):
    """The requested quantity is not defined or not implemented."""


class DimensionError(SeqcalError, ValueError):
    """Array shapes or sequence lengths do not agree."""


class DegenerateScaleError(SeqcalError, ValueError):
    """A column mean is zero, so it cannot be used as a scale."""


class SearchExhausted(SeqcalError, RuntimeError):
    """The stochastic search ran out of attempts.

    ``partial`` holds whatever qualified before the budget ran out.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
