"""Exception hierarchy shared across the package."""


class PurcellLabError(Exception):
    """Base class for all errors raised by purcell_lab."""


class ValidationError(PurcellLabError):
    """Invalid input data or scenario schema violation."""


class ConvergenceError(PurcellLabError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class UnstableSystemError(PurcellLabError):
    """Drift matrix has a non-negative spectral abscissa; no steady state."""


class SingularMatrixError(PurcellLabError):
    """A resolvent or linear system is singular at the requested point."""


class CutoffError(PurcellLabError):
    """Truncated Fock space too small for the requested evolution."""


class NumericalError(PurcellLabError):
    """A numerical post-condition (residual, positivity) was violated."""
