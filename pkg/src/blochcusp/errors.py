"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid scenario or run configuration."""


class NumericalError(RuntimeError):
    """A numerical routine failed its own accuracy checks."""
