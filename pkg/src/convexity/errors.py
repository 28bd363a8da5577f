"""Exception hierarchy shared by every module."""


class ConvexityError(Exception):
    """Base class for all errors raised by this package."""


class InputError(ConvexityError, ValueError):
    """Malformed or invalid input (bad matrix, bad parameters, bad shape)."""


class ParseError(InputError):
    """Expression source could not be parsed.

    ``offset`` is the byte offset into the source where parsing failed.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


class PreconditionError(InputError):
    """An operation was called on an argument violating its precondition."""


class UnsupportedError(ConvexityError):
    """Requested size or feature is outside what is implemented."""


class DomainError(ConvexityError, ArithmeticError):
    """A numeric evaluation left the domain where it is finite and real."""


class BoundaryError(DomainError):
    """A finite-difference stencil could not be fitted inside the domain."""
