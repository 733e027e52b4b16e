"""Exception hierarchy shared by every layer of the package."""


class NeuroInheritError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(NeuroInheritError, ValueError):
    """Invalid sizes, ranges or option values."""


class ShapeError(NeuroInheritError, ValueError):
    """Array or genome dimensions do not line up."""


class DataError(NeuroInheritError, ValueError):
    """Dataset content cannot be used for the requested operation."""


class KindMismatchError(DataError):
    """A classification metric was asked of a regression dataset, or vice versa."""


class DegenerateDataError(DataError):
    """Targets carry no variance, so a normalized error is undefined."""


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ModeMismatchError(NeuroInheritError, ValueError):
    """A fitness record does not carry the fields the comparator needs."""


class StateError(NeuroInheritError, RuntimeError):
    """Engine invoked on an unusable population."""
