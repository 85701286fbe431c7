"""Exception and warning types raised across the package."""


class HestonError(Exception):
    """Base class for all package errors."""


class CoefficientError(HestonError, ValueError):
    """A Heston coefficient violates an ellipticity or sign condition."""


class NormalizationError(HestonError):
    """No coordinate change removes the b1 drift term.

    `change` holds the candidate change that was tried, if any.
    """

    def __init__(self, message, change=None):
        super().__init__(message)
        self.change = change


class DomainError(HestonError, ValueError):
    """Evaluation requested outside the open half-plane."""


class PreconditionError(HestonError, ValueError):
    """Inputs do not satisfy the hypotheses of an analytic check."""


class AssemblyError(HestonError):
    """Degenerate cell or inconsistent grid during assembly."""


class SideConditionError(HestonError, ValueError):
    """Envelope coefficients violate a side condition."""


class BarrierError(HestonError):
    """The barrier denominator A(m + phi - 2g) is not positive."""


class EnvelopeError(HestonError):
    """Envelope admissibility fails for the supplied data."""


class LinearSolveError(HestonError):
    """A sparse linear solve failed or stagnated."""


class NonconvergenceError(HestonError):
    """A nonlinear or outer iteration did not reach its tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ParamError(HestonError, ValueError):
    """Forbidden special-function parameter."""


class ConfigError(HestonError, ValueError):
    """Malformed run configuration."""


class AccuracyWarning(UserWarning):
    """A special-function evaluation left its high-accuracy regime."""


class CoefficientWarning(UserWarning):
    """Assembly with b1 != 0; Garding constants then rely on Dirichlet data on the x-sides."""
