"""Exception types shared across the package."""


class PluripolarError(Exception):
    """Base class for all package errors."""


class RuleError(PluripolarError, ValueError):
    """Invalid coefficient rule or out-of-range parameter."""


class SyntheticRuleError(PluripolarError, TypeError):
    """A pointwise operation was requested on a synthetic-norms rule."""


class CertificationError(PluripolarError, RuntimeError):
    """A certified tail bound could not be established within the work cap."""


class DegenerateError(PluripolarError, ArithmeticError):
    """Input is analytic-degenerate: the norm sequence grows at most geometrically.

    This is the trigonometric-polynomial case, where the associated function
    vanishes for large radii and the scale sequences are infinite.
    """


class DomainError(PluripolarError, ValueError):
    """A point lies outside the domain of a map or function."""


class ConvergenceError(PluripolarError, RuntimeError):
    """An iterative solver hit its iteration cap.

    ``best`` carries the best iterate found so far.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
