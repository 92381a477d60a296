class NumericalError(ArithmeticError):
    """A linear-algebra step failed even after jitter escalation."""


class ConfigurationError(ValueError):
    """An experiment, attack or sweep was configured inconsistently."""
