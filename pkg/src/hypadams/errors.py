"""Exception hierarchy shared by all numerical modules."""


class HypAdamsError(Exception):
    """Base class for every error raised by the package."""


class NonConvergent(HypAdamsError):
    """A quadrature or iterative procedure did not reach its tolerance."""


class NonFinite(HypAdamsError):
    """An integrand produced NaN or infinity at an interior node."""


class DomainError(HypAdamsError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NotMonotone(HypAdamsError, ValueError):
    """A profile expected to be nonincreasing is not."""


class DivergentMode(HypAdamsError, ValueError):
    """The requested functional diverges for every nonzero input."""


class ConstraintViolated(HypAdamsError, ValueError):
    """An admissibility constraint on an input was violated."""
