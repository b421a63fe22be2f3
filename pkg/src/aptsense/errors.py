"""Exception types raised by the analysis modules."""


class InvalidParameters(ValueError):
    """A parameter set violates its construction invariants."""


class NumericalFailure(ArithmeticError):
    """Base class for failures of a numerical routine on valid input."""


class NonFiniteMatrix(NumericalFailure):
    pass


class SingularAtFrequency(NumericalFailure):
    """The inverse transfer matrix is singular: omega is a critical frequency."""

    def __init__(self, omega, determinant):
        self.omega = omega
        self.determinant = determinant
        super().__init__(
            f"inverse transfer matrix is singular at omega={omega!r} "
            f"(det={determinant!r})"
        )


class SingularCovariance(NumericalFailure):
    pass


class NotOnCriticalLocus(NumericalFailure):
    pass


class WrongPoleOrder(NumericalFailure):
    pass


class InsufficientData(NumericalFailure):
    pass


class GainNotLindblad(NumericalFailure):
    """Negative cavity rates cannot be written as a Lindblad dissipator."""


class CutoffLeak(NumericalFailure):
    """Population reached the top Fock level of the truncated space."""
