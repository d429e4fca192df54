"""Exception hierarchy shared by the library and the command line."""


class SphexError(Exception):
    """Base class for all errors raised by :mod:`sphex`."""

    exit_code = 1


class InvalidParameterError(SphexError, ValueError):
    """A parameter is out of its admissible range (bad ``d``, ``q``, ``s`` ...)."""


class DomainError(SphexError, ValueError):
    """An argument lies outside the domain of a special function."""


class InputDataError(SphexError, ValueError):
    """User-supplied data (oracle values, sample files) is unusable."""


class FormatError(SphexError, ValueError):
    """A serialized model or table does not parse."""


class NumericalError(SphexError, ArithmeticError):
    """A linear-algebra routine failed to converge."""

    exit_code = 2


class FileAccessError(SphexError, OSError):
    """Reading or writing a file failed."""

    exit_code = 3
