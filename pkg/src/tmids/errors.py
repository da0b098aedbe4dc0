"""Exception types shared across the toolkit."""


class TmidsError(ValueError):
    """Base class for all errors raised by this package."""


class ParseError(TmidsError):
    """Malformed input; ``line`` is the 1-based line or row number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(TmidsError):
    """Input parsed but violates a dataset invariant."""


class ConfigError(TmidsError):
    """Invalid configuration value."""
