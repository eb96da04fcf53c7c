"""Exception types shared across the package."""


class TabdetError(Exception):
    """Base class for package errors."""


class ParseError(TabdetError, ValueError):
    """Raised when a CSV file or a cell value cannot be parsed."""


class ConfigError(TabdetError, ValueError):
    """Raised when an experiment config or model config is invalid."""


class SplitError(TabdetError, ValueError):
    """Raised when a split spec cannot produce a legal plan."""
