"""Exception types shared across the package.

The CLI maps these onto exit codes (input 2, configuration 3, resource 4).
"""


class AdboundError(Exception):
    """Base class for all package errors."""


class InputError(AdboundError):
    """Malformed values: bad indices, inconsistent scopes, invalid tables."""


class ParseError(InputError):
    """Malformed model or evidence file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(AdboundError):
    """A request that can never succeed as configured (e.g. width exceeds the i-bound)."""


class ResourceLimitError(AdboundError):
    """A computation would exceed a configured size or memory cap."""


class UndefinedConditionalError(AdboundError):
    """All upper bounds on the joint are zero, so no conditional is defined."""
