"""Text-mining intrusion detection over system-call frequency data."""

__version__ = "0.1.0"

from .errors import ConfigError, ParseError, TmidsError, ValidationError  # noqa: E402

__all__ = ["ConfigError", "ParseError", "TmidsError", "ValidationError", "__version__"]
