"""Exception hierarchy shared by all semgnet modules."""


class SemgNetError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(SemgNetError, ValueError):
    """A caller supplied an argument outside its documented range."""


class ShapeError(SemgNetError, ValueError):
    """Array shapes are inconsistent with an operation's contract."""


class DataError(SemgNetError, ValueError):
    """Input data is invalid (non-finite samples, incomplete datasets)."""


class FormatError(DataError):
    """An on-disk container is malformed or truncated."""


class NumericError(SemgNetError, ArithmeticError):
    """A computation produced non-finite values."""


class ConfigError(SemgNetError, ValueError):
    """A run configuration is inconsistent or unusable."""
