"""Exception types that map to distinct CLI exit codes."""


class ConfigError(ValueError):
    """Invalid experiment or training configuration."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""
