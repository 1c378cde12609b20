"""Exception types shared across the package.

Parameter/domain violations derive from ValueError so they behave like
ordinary bad-argument errors; runtime numerical failures derive from
RuntimeError so callers can distinguish "you asked for something invalid"
from "the computation did not converge".
"""


class DomainError(ValueError):
    """Input outside the admissible parameter or geometric domain."""


class InfeasibleParameters(ValueError):
    """Parameter combination with no solution regime (e.g. p*q_eps <= 1)."""


class RegimeError(ValueError):
    """Operation requested in a tail regime where it is not defined."""


class WindowError(ValueError):
    """Perturbed-problem rate law requested outside its parameter window."""


class SingularityError(ValueError):
    """Evaluation exactly on a kernel singularity."""


class CompositionError(ValueError):
    """Mismatched ingredients (e.g. missing iterated-Green data)."""


class DataError(ValueError):
    """Malformed series or schedule data."""


class IntegrationFailure(RuntimeError):
    """ODE integration broke down; carries the last reached radius."""

    def __init__(self, message, last_r=None):
        super().__init__(message)
        self.last_r = last_r


class BracketingError(RuntimeError):
    """Shooting parameter could not be bracketed in the configured range."""


class TailExtractionError(RuntimeError):
    """The weighted tail did not reach a converged plateau."""


class ExtractionError(RuntimeError):
    """Diagonal-limit extrapolation did not converge."""


class ContinuationFailure(RuntimeError):
    """Newton/continuation step failed; caller may refine the schedule."""


class PositivityError(RuntimeError):
    """An accepted iterate left the positive cone."""


class ResolutionError(RuntimeError):
    """Grid too coarse to resolve a singular source or a solution peak."""


class AccuracyError(RuntimeError):
    """Estimated quadrature error above the requested tolerance."""
