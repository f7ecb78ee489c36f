"""Exception types shared across the package."""


class CalderonError(Exception):
    """Base class for all library errors."""


class SpecError(CalderonError):
    """Operator specification violates a structural invariant."""


class ParseError(CalderonError):
    """An operator-spec document could not be parsed."""


class DefectMode(CalderonError):
    """A characteristic root sits on the real axis, so decaying and
    growing solutions do not split the Cauchy-data space."""

    def __init__(self, message, mode=None, roots=None):
        super().__init__(message)
        self.mode = mode
        self.roots = roots


class ContourNotConverged(CalderonError):
    """Node doubling exceeded the node budget without convergence."""


class EigenvalueOnContour(CalderonError):
    """An eigenvalue lies on (or too close to) the integration contour."""


class EigenvalueOnCut(CalderonError):
    """An eigenvalue lies on the branch cut, or the spectrum cannot be
    separated from it by a circle."""


class NoFreeRay(CalderonError):
    """No eigenvalue-free angular sector of the required width exists."""


class SingularBlock(CalderonError):
    """The top-order coefficient block is singular."""


class IllConditionedFrame(CalderonError):
    """The weighted Gram matrix of a frame is numerically singular."""


class CutoffMismatch(CalderonError):
    """Two Grassmannian points were built with incompatible conventions."""


class ThresholdAmbiguous(CalderonError):
    """A singular value falls inside the forbidden decade around the
    kernel threshold, so kernel dimensions cannot be trusted."""


class TailUnsafe(CalderonError):
    """The outermost mode shell does not certify index convergence."""


class NoChiralStructure(CalderonError):
    """The operator carries no usable L/R block marking."""


class InsufficientData(CalderonError):
    """Not enough singular values for the requested analysis."""
