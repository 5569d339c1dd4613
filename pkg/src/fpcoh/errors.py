"""Exception hierarchy shared by all fpcoh modules."""


class FpcohError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(FpcohError):
    """Input outside the mathematical domain of an operation."""


class PrecisionError(FpcohError):
    """A decision could not be certified at the available p-adic precision.

    Carries the offending absolute precision when known.
    """

    def __init__(self, message, absolute_precision=None):
        super().__init__(message)
        self.absolute_precision = absolute_precision


class ValidationError(FpcohError):
    """A parsed document violates an invariant of its target type."""


class ParseError(FpcohError):
    """A document is not well-formed (bad JSON, wrong envelope, bad scalar)."""


class NotNullHomologous(DomainError):
    """A cycle fed to an Abel-Jacobi evaluator has a nonzero obstruction class."""

    def __init__(self, message, obstruction=None):
        super().__init__(message)
        self.obstruction = obstruction


class NonOrdinaryDisc(DomainError):
    """A Coleman operation hit a Weierstrass or infinite residue disc."""


class SingularSystem(DomainError):
    """The Frobenius equivariance system is singular (defensive; cannot occur
    for certified weight-1 data)."""
