"""Exception types shared across the package."""


class PadicHeatError(Exception):
    pass


class DomainError(PadicHeatError, ValueError):
    """Input outside the mathematical domain of an operation."""


class AccuracyError(PadicHeatError, ArithmeticError):
    """Requested accuracy could not be certified."""

    def __init__(self, msg, achieved=None):
        super().__init__(msg)
        self.achieved = achieved


class ConvergenceError(AccuracyError):
    """A series did not settle within the sphere-index cap."""


class ResourceError(PadicHeatError, RuntimeError):
    """Enumeration larger than the configured cap."""


class PrecisionError(PadicHeatError, ArithmeticError):
    """Digit window too short to resolve a valuation."""


class WindowTooSmallError(PadicHeatError, ValueError):
    """Radius window clips more probability than allowed."""


class ConstructionError(PadicHeatError, ValueError):
    """An inductive construction has no admissible next step."""
