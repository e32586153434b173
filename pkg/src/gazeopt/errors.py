"""Exception hierarchy shared by every module.

The CLI maps these onto process exit codes; library users can catch the
base class or the specific kind they care about.
"""


class GazeoptError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(GazeoptError, ValueError):
    """An argument is outside the mathematical domain of an operation.

    Examples: non-positive observer distance, fixation outside the field,
    zero-area image, empty fixation list.
    """


class DataFormatError(GazeoptError):
    """An input file or record is malformed or violates the documented schema."""


class NumericError(GazeoptError):
    """A numeric computation failed (singular matrix, non-finite values, ...)."""
