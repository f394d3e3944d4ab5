"""Exception hierarchy shared by all foldcont modules."""


class FoldcontError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FoldcontError):
    """Invalid configuration value or malformed config file."""


class DomainError(FoldcontError):
    """Argument outside the domain of a nonlinearity or operation."""


class DegenerateMapError(FoldcontError):
    """A candidate diffeomorphism has det J <= 0 somewhere on the grid."""


class SingularJacobian(FoldcontError):
    """Linearized operator numerically singular during a fixed-mu solve."""


class NoConvergence(FoldcontError):
    """Newton iteration exhausted without meeting the residual tolerance."""

    def __init__(self, message, last_iterate=None, history=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.history = history if history is not None else []


class SingularBordered(FoldcontError):
    """Bordered (extended) matrix singular: genuinely degenerate point."""


class StepFailure(FoldcontError):
    """A single continuation step failed; caller may retry with smaller ds."""


class DegeneratePoint(FoldcontError):
    """Non-simple or non-transversal singular point encountered on a branch."""


class NewtonFailure(FoldcontError):
    """Continuation-level Newton failure with the last good point preserved."""

    def __init__(self, message, last_good=None):
        super().__init__(message)
        self.last_good = last_good


class BracketError(FoldcontError):
    """Fold refinement called on a bracket without a sign change."""


class EigSolverFailure(FoldcontError):
    """Eigenvalue iteration did not produce residual-verified pairs."""


class NotAFold(FoldcontError):
    """Hadamard pairing requested with an eigenfunction far from the kernel."""


class InsufficientSamples(FoldcontError):
    """Not enough stored branch samples around a fold for the CR fits."""


class BlowupError(FoldcontError):
    """Shooting integration exceeded the blow-up cap mid-interval."""
