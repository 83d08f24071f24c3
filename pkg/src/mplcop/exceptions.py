"""Exception types raised by mplcop."""


class ParameterDomainError(ValueError):
    """A copula parameter lies outside its family's domain."""


class InversionRangeError(ValueError):
    """A dependence coefficient cannot be attained by the family."""


class NumericalError(ArithmeticError):
    """A quadrature, quantile or root iteration failed to converge.

    Attributes
    ----------
    diagnostics : dict
        Whatever the failing routine knew when it gave up.
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class SingularInformationError(NumericalError):
    """The pseudo-likelihood is flat at the estimate; no standard error."""
