"""Exception types shared across the package."""


class DomainError(ValueError):
    """A numeric argument violates the mathematical domain of an operation."""


class ConfigError(ValueError):
    """A configuration file or parameter combination is invalid."""
