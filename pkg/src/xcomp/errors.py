"""Exception hierarchy shared by all modules."""


class XCompError(Exception):
    """Base class for every error raised by :mod:`xcomp`."""


class InvalidArgumentError(XCompError, ValueError):
    """An argument is out of domain, has the wrong shape, or is not finite."""


class NumericFailureError(XCompError, ArithmeticError):
    """An iterative solver did not converge or parameters are inconsistent."""


class InvalidStateError(XCompError):
    """An operator was used in a way its construction does not support."""


class IntegrityError(XCompError):
    """A persisted operator does not match the grid it is applied to."""


class FormatError(XCompError):
    """A persisted file is truncated, corrupted or of an unknown version."""

    def __init__(self, message, *, found=None, expected=None):
        super().__init__(message)
        self.found = found
        self.expected = expected
