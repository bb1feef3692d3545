"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Dimension or shape mismatch between operands."""


class DomainError(ValueError):
    """Input outside the mathematical domain of validity of an operation."""


class SingularityError(ValueError):
    """A matrix that must be invertible is numerically singular."""

    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


class ConvergenceError(RuntimeError):
    """An iteration failed to converge; carries the residual history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class WindingError(RuntimeError):
    """Boundary winding number differs from the value required for a homeomorphism."""
