"""Exception types shared across the package."""


class SDCError(Exception):
    """Base class for all package errors."""


class ShapeError(SDCError, ValueError):
    pass


class DegenerateInputError(SDCError, ValueError):
    pass


class DomainError(SDCError, ValueError):
    pass


class EncodingError(SDCError, ValueError):
    pass


class InsufficientDataError(SDCError, ValueError):
    pass


class FormatError(SDCError, ValueError):
    """Raised by file readers; carries the byte offset where parsing failed."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class NumericalError(SDCError, ArithmeticError):
    pass
