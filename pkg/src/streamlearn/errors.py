"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A config value is missing, malformed, or inconsistent."""


class NumericError(RuntimeError):
    """A sanctioned operation produced non-finite values."""


class DivergenceError(NumericError):
    """Training loss became non-finite or exceeded the divergence guard."""
