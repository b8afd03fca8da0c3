"""Exception types shared across the package."""


class ConfigError(Exception):
    """Bad scenario / configuration input. CLI exit code 1."""


class DataError(Exception):
    """Unreadable or malformed packet data. CLI exit code 2."""


class InsufficientTrainingData(ValueError):
    """Raised when a node has no benign windows to learn from."""
