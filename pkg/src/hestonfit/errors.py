"""Exception types shared across the package."""


class HestonError(Exception):
    """Base class for package-specific errors."""


class DomainError(HestonError, ValueError):
    """A numeric input lies outside its mathematical domain."""


class EvaluationOverflowError(HestonError, ArithmeticError):
    """An evaluation produced a non-finite intermediate or result."""


class NoSolutionError(HestonError, ValueError):
    """A root-finding problem has no solution within admissible bounds."""


class SingularSystemError(HestonError, RuntimeError):
    """The damped normal equations could not be factorised."""


class FileFormatError(HestonError, ValueError):
    """An input document does not conform to the expected format."""
