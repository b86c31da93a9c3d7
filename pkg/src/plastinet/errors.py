"""Shared exception types."""


class ConfigError(ValueError):
    """Invalid configuration value or unknown environment name."""


class NumericError(ValueError):
    """Non-finite value reached a numeric operation."""


class CheckpointError(RuntimeError):
    """Checkpoint is malformed or written by an incompatible version."""
