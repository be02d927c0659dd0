"""Exception hierarchy shared across the package."""


class BethePermError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(BethePermError, ValueError):
    pass


class ShapeError(BethePermError, ValueError):
    pass


class NegativeEntryError(BethePermError, ValueError):
    pass


class SizeError(BethePermError, ValueError):
    """Problem size exceeds the cap of the requested method."""


class SupportError(BethePermError, ValueError):
    """Input violates the support pattern (missing perfect matching, mass on a zero entry, ...)."""


class DomainError(BethePermError, ValueError):
    pass


class BoundaryError(BethePermError, ValueError):
    """Gradient requested at a point on the boundary of the polytope."""


class NumericalError(BethePermError, ArithmeticError):
    pass


class InfeasibleError(BethePermError, ValueError):
    """No finite-cost perfect matching exists."""


class PositivityError(BethePermError, ValueError):
    pass


class AdmissibilityError(BethePermError, ValueError):
    """Fractional coefficients do not satisfy the concavity conditions."""
