"""Exception types shared across the package.

The CLI maps these onto exit codes (see cli.py), so solver failures,
I/O problems and bad parameters must stay distinguishable.
"""


class GridSegError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(GridSegError, ValueError):
    """A scalar argument or configuration value is out of range."""


class DimensionError(GridSegError, ValueError):
    """Array shapes or sizes do not line up."""


class BandCountError(GridSegError, ValueError):
    """An image has the wrong number of bands for the operation."""


class TooLargeError(GridSegError, ValueError):
    """Problem exceeds a hard size cap (e.g. the exhaustive solver)."""


class UndefinedValueError(GridSegError, ArithmeticError):
    """A quantity is mathematically undefined for the given inputs."""


class DivergenceError(GridSegError, RuntimeError):
    """An iterative procedure produced non-finite values."""


class FormatError(GridSegError, ValueError):
    """A file does not conform to one of the documented text/binary formats."""
