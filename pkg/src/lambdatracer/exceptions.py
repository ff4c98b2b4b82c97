"""Exception types shared across the package.

The CLI maps each class to a distinct exit code, so callers that need to
distinguish bad input from bad configuration can catch them separately.
"""


class DataError(ValueError):
    """Input data violates a contract (bad file, negative loss, missing label)."""


class LossFileError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"{message} at line {line}"
        super().__init__(message)


class ConfigError(ValueError):
    """A configuration value is invalid or inconsistent."""


class DegenerateTransformError(ArithmeticError):
    """The transformed data has zero variance, so nothing downstream is defined."""
