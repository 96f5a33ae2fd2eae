"""Exception types raised by the numerical routines."""


class MembraneError(Exception):
    """Base class for every error raised by this package."""


class EventNotFound(MembraneError):
    """The stopping event never occurred before the arc-length cap."""


class SingularBlowup(MembraneError):
    """The profile curvature exceeded the blow-up guard."""


class HalfSpaceExit(MembraneError):
    """The profile crossed the plane z = 0."""


class ConvergenceFailure(MembraneError):
    """An iterative eigen-solve did not reach its residual target."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DegenerateWeight(MembraneError):
    """An eigenproblem weight is not strictly positive."""


class SingularOperator(MembraneError):
    """A linear solve was requested for an operator with a zero eigenvalue."""
