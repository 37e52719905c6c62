"""Exception types raised across the package."""


class SpinPathError(Exception):
    """Base class for every error this package raises on purpose."""


class DomainError(SpinPathError, ValueError):
    """An argument lies outside the documented domain."""


class PreconditionError(SpinPathError, ValueError):
    """An input object violates a documented precondition or invariant."""


class InsufficientDataError(SpinPathError):
    """Too few (distinct) data points for the requested reduction."""


class SingularFitError(SpinPathError):
    """Degenerate fit geometry, e.g. all phases equal modulo pi."""


class CsvFormatError(SpinPathError):
    """A scan CSV file is malformed. Carries the offending line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class ConfigError(SpinPathError):
    """A run-configuration file could not be parsed or validated."""
