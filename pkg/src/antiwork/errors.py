"""Exception types shared across stages."""


class ConfigError(ValueError):
    """Invalid configuration or arguments; the CLI maps this to exit status 2."""
