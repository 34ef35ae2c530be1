"""Exception types shared across the package."""


class VrmcmcError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(VrmcmcError, ValueError):
    pass


class NumericOverflowError(VrmcmcError, ArithmeticError):
    """A gradient evaluation produced a non-finite value."""

    def __init__(self, message, datum_index=None):
        super().__init__(message)
        self.datum_index = datum_index


class DivergedChainError(VrmcmcError, ArithmeticError):
    """A chain state left the finite reals."""

    def __init__(self, message, iteration=None, step_size=None):
        super().__init__(message)
        self.iteration = iteration
        self.step_size = step_size


class ContractViolationError(VrmcmcError, RuntimeError):
    pass


class TooLargeError(VrmcmcError, ValueError):
    """Exhaustive enumeration would exceed the configured guard."""


class QuadratureError(VrmcmcError, ArithmeticError):
    pass


class ConfigError(VrmcmcError, ValueError):
    pass
