"""Exception types shared across the toolkit."""


class CmllError(Exception):
    """Base class for all toolkit errors."""


class InputError(CmllError, ValueError):
    """Invalid argument values or inconsistent dimensions."""


class InvalidStateError(CmllError, RuntimeError):
    """Operation attempted on an object that is not ready for it,
    e.g. evaluating an RBF kernel whose bandwidth is still unresolved."""


class ParseError(CmllError, ValueError):
    """Malformed dataset text. Carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ModelFormatError(CmllError, ValueError):
    """Corrupt, truncated, or wrong-version model stream."""


class NumericError(CmllError, ArithmeticError):
    """Numerical failure (factorization breakdown, singular solve).
    `pivot` holds the 1-based index of the failing Cholesky pivot when known."""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class UndefinedMetricError(CmllError, ValueError):
    """The metric has no defined value on the given inputs."""
