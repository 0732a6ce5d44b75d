"""Exception taxonomy.

Every error raised by this package derives from CubetopError so callers can
catch one type. The CLI maps FormatError (and OS-level IO failures) to exit
code 2 and every other CubetopError to exit code 3.
"""


class CubetopError(Exception):
    """Base class for all cubetop errors."""


class InvalidRangeError(CubetopError):
    """An interval argument has lo >= hi."""


class ShapeError(CubetopError):
    """Array dims, patch grids, or volume shapes are incompatible."""


class DimensionMismatchError(CubetopError):
    """Two persistence diagrams of different homology dimension were mixed."""


class SizeLimitError(CubetopError):
    """An input exceeds the documented size cap of an exact routine."""


class ConfigError(CubetopError):
    """Loss weights or other configuration violate their invariants."""


class FormatError(CubetopError):
    """A file does not conform to its declared format."""
