"""Exception types raised across the package."""


class TwoSourceError(Exception):
    """Base class for all package errors."""


class QuadratureError(TwoSourceError):
    """Adaptive quadrature did not reach its tolerance within the refinement cap."""

    def __init__(self, message, estimate=None, abserr=None):
        super().__init__(message)
        self.estimate = estimate
        self.abserr = abserr


class DegenerateOverlapError(TwoSourceError):
    """The overlap delta(d) equals -1, which makes the beamsplitter transmissivity undefined."""


class CutoffTooSmallError(TwoSourceError):
    """A Fock-space truncation discards more probability than allowed."""


class DimensionCapError(TwoSourceError):
    """A tensor-power computation would exceed the configured size cap."""


class InvariantViolationError(TwoSourceError):
    """A matrix that should be PSD/Hermitian is not, beyond roundoff."""


class UndefinedLikelihoodError(TwoSourceError):
    """An observed outcome has zero probability under both hypotheses."""


class RejectionCapError(TwoSourceError):
    """Rejection sampling exhausted its proposal budget."""
