"""Exception hierarchy shared by all modules."""


class NormApproxError(Exception):
    """Base class for every error raised by this package."""


class ReducibleError(NormApproxError, ValueError):
    """The defining polynomial has a rational root."""


class NoRealRootError(NormApproxError, ValueError):
    """A root selector isolates no real root."""


class AmbiguousRootError(NormApproxError, ValueError):
    """A root selector contains more than one real root."""


class DivisionByZero(NormApproxError, ZeroDivisionError):
    pass


class PrecisionExhausted(NormApproxError, ArithmeticError):
    """Ball arithmetic could not resolve a comparison below the precision cap."""

    def __init__(self, message, q=None):
        super().__init__(message)
        self.q = q


class SingularGram(NormApproxError, ValueError):
    """Basis elements are linearly dependent over Q."""


class SearchExhausted(NormApproxError, RuntimeError):
    """A height-capped search ended before finding what it needed."""


class NonIntegerTrace(NormApproxError, ValueError):
    """A trace expected to be an integer was not (input not in the dual lattice)."""


class ZeroQ(NormApproxError, ValueError):
    """Tr(su) vanished, so the pair does not give an approximation."""


class WrongDimension(NormApproxError, ValueError):
    pass
