"""
Error hierarchy shared by every app of the toolkit.

Each class maps onto one process exit code when raised out of a management
command (see core.management.base).
"""

from django.core.exceptions import ValidationError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_IO = 3


class CorrNetError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(CorrNetError, ValueError):
    """Tensor extents disagree with an operator contract."""


class InvalidShapeError(ShapeError):
    """A shape list is empty or holds a non-positive extent."""


class ConfigError(CorrNetError, ValidationError):
    """
    A configuration, spec or netspec text violates its invariants.

    Derives from Django's ValidationError so that serializer and model-style
    clean() code can raise it directly.
    """

    def __init__(self, message):
        ValidationError.__init__(self, message)
        self.detail = message

    def __str__(self):
        return self.detail


class NumericError(CorrNetError, ArithmeticError):
    """A loss or gradient became non-finite, or a gradient check failed."""


class TapeError(CorrNetError, RuntimeError):
    """The autodiff tape was misused or contains a cycle."""


class DatasetFormatError(CorrNetError, OSError):
    """A dataset or checkpoint file is malformed."""
