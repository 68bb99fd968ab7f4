__all__ = ["ConfigurationError", "DomainError", "DataError", "NonFiniteLossError"]


class ConfigurationError(ValueError):
    pass


class DomainError(ValueError):
    pass


class DataError(ValueError):
    pass


class NonFiniteLossError(ArithmeticError):
    """Raised when a training step produces a loss that is not finite.

    Attributes
    ----------
    breakdown : LossBreakdown or dict
        Every component computed before the failure, for the diagnostic dump.
    """
    def __init__(self, message, breakdown):
        super().__init__(message)
        self.breakdown = breakdown
