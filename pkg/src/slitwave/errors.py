"""Exception hierarchy shared across the package.

Each family maps onto one CLI exit code, so callers that only care about
the category can catch the base classes.
"""


class SlitwaveError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class ConfigError(SlitwaveError, ValueError):
    """Invalid configuration: bad key, bad number, or violated invariant."""

    exit_code = 2

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class NumericalError(SlitwaveError, ArithmeticError):
    """A numerical routine could not meet its tolerance or budget."""

    exit_code = 3

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class WindowError(NumericalError):
    """The detector window does not capture the pattern (tail guard)."""


class ZeroMassError(NumericalError):
    """A density with no mass was passed where a normalisation is needed."""
