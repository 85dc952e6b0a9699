class SpectrumError(RuntimeError):
    """An eigensolve or band computation produced unusable output."""


class DomainError(ValueError):
    """Energy outside the spectrum where an in-band energy is required."""


class BandEdgeError(DomainError):
    """Evaluation at (or numerically indistinguishable from) a band edge."""


class NotEllipticError(DomainError):
    """The one-period transfer matrix is not elliptic (``|trace| >= 2``)."""


class QuadratureError(RuntimeError):
    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class NumericalEscalationError(RuntimeError):
    """Raised after extended precision failed to resolve a numerical decision."""


class PrecisionError(ValueError):
    def __init__(self, message, required_bits):
        super().__init__(message)
        self.required_bits = required_bits
