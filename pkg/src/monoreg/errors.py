"""Exception types shared across the package."""


class MonoregError(Exception):
    """Base class for all package-specific errors."""


class ContractError(MonoregError, ValueError):
    """An argument violated a documented precondition (shape, symmetry, ...)."""


class SingularMatrixError(MonoregError):
    """A linear solve hit a pivot below the singularity threshold."""


class EquilibriumError(MonoregError):
    """No admissible equilibrium exists for the requested set-point."""


class ConvergenceError(MonoregError):
    """An iterative solver exhausted its budget.

    Carries the last residual so callers can report how close it got.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class RegularizationError(MonoregError):
    """The regularized controller is invalid for the paired plant (no contraction)."""


class ScenarioError(MonoregError, ValueError):
    """A scenario file failed validation."""
