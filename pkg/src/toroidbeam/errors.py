"""Exception types for configuration and run-time failures."""


class ConfigError(ValueError):
    """Invalid configuration or parameter value."""


class ConfigFileError(ConfigError):
    """Configuration file missing or unreadable."""


class ConfigParseError(ConfigError):
    """Configuration file could not be parsed (bad key or value)."""


class ConfigInvariantError(ConfigError):
    """Parsed configuration violates a cross-field invariant."""


class RunError(RuntimeError):
    """Simulation failed at run time (e.g. timeout-dominated shot)."""
