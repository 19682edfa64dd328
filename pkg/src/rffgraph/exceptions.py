"""Error types shared across the package, mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class DataError(ValueError):
    """Input data missing, malformed, or incompatible with the config."""


class DivergenceError(RuntimeError):
    """A numeric run left the finite range it is allowed to occupy."""
