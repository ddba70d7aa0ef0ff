"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid shape, seed, schedule or experiment configuration."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class DegenerateInputError(ValueError):
    """Input is well-formed but the operation is undefined on it (e.g. a zero matrix)."""


class NumericalError(ArithmeticError):
    """An iterative kernel failed to converge or produced non-finite output."""
