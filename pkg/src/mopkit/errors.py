"""Exception types shared across the package."""


class MopkitError(Exception):
    """Base class for all library errors."""


class NotNormalIndexError(MopkitError):
    """The linear system defining a polynomial at this multi-index is singular."""

    def __init__(self, index, detail=""):
        self.index = tuple(index)
        msg = f"multi-index {self.index} is not normal"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class PrecisionFailure(MopkitError):
    """A quadrature or refinement loop failed to reach the requested tolerance."""


class SupportDomainError(MopkitError):
    """Evaluation point lies inside the support where the transform is undefined."""


class ConstructionError(MopkitError):
    """Measure-system construction preconditions are violated."""


class ValidationError(MopkitError):
    """Invalid user-facing input (intervals, directions, tuples, configs)."""

    def __init__(self, message, code="E_INVALID"):
        self.code = code
        super().__init__(message)


class BoundsError(MopkitError):
    """A matrix or path was not built large enough for the requested operation."""
