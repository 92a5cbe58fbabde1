"""Shared error types."""


class ConfigError(ValueError):
    """A model, parameter set, or run configuration violates a stated requirement."""


class InfiniteValue(RuntimeError):
    """A scan hit a +inf energy value where a finite one was required."""


class SizeError(ValueError):
    """A requested mesh exceeds the desk-scale element cap."""
