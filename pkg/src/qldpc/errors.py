"""Exception types shared across the package."""


class QldpcError(Exception):
    """Base class for all qldpc-specific errors."""


class ValidationError(QldpcError, ValueError):
    """An input violates a documented precondition or invariant."""


class ConfigurationError(QldpcError, ValueError):
    """A configuration is inconsistent or infeasible (empty grid, width mismatch, ...)."""


class DesignError(QldpcError, RuntimeError):
    """A design step cannot be completed as configured.

    Carries ``required_bits`` when the failure is an accumulator overflow, so
    callers can report the width that would have been needed.
    """

    def __init__(self, message, required_bits=None):
        super().__init__(message)
        self.required_bits = required_bits


class AlistParseError(QldpcError, ValueError):
    """Malformed alist text; ``line`` is the offending 1-based line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConstructionError(QldpcError, RuntimeError):
    """Graph construction failed (infeasible degrees, girth target unreachable)."""
