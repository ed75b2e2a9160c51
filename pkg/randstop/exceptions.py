from typing import Optional

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_FAULT = 3


class RandstopError(Exception):
    """Base class for errors raised by randstop."""


class ConfigurationError(RandstopError, ValueError):
    """Invalid model or run configuration.

    Args:
        message (`str`):
            Human readable description.
        field (`str`, *optional*):
            Name of the offending configuration field.
    """

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        self.reason = message
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class NumericFault(RandstopError, ArithmeticError):
    """Non-finite objective, gradient or function value."""

    def __init__(self, message: str, date_index: Optional[int] = None):
        self.date_index = date_index
        if date_index is not None:
            message = f"date {date_index}: {message}"
        super().__init__(message)
