"""Exception hierarchy shared by every module."""


class GraphonAugError(Exception):
    """Base class for all package errors."""


class ValidationError(GraphonAugError, ValueError):
    """Input violates a documented precondition or invariant."""


class ParseError(ValidationError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FormatError(ValidationError):
    """A graphon or report file does not follow its text format."""


class ConfigError(ValidationError):
    """Experiment or CLI configuration is invalid."""


class NumericError(GraphonAugError, ArithmeticError):
    """Non-finite values reached a numerical routine."""
