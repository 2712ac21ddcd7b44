"""Exception types shared across the package."""


class ConfigurationError(Exception):
    """Invalid static configuration: bad sizes, unknown keys, inconsistent setups."""


class NumericsError(RuntimeError):
    """Non-finite value encountered where the math requires finite numbers."""
