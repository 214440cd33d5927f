"""Exception hierarchy.

Validation problems (bad input, bad config, failed suites) and numeric
problems (integration blow-up, unresolved winding, quadrature failure) are kept
apart so the command line can map them to distinct exit codes.
"""


class BraidflowError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(BraidflowError, ValueError):
    pass


class DomainError(ValidationError):
    """Evaluation requested outside the model (negative radius, point off the disk)."""


class UnsupportedStructureError(ValidationError):
    pass


class NotAutonomousShapeError(ValidationError):
    """A strand is neither constant nor a simple closed loop."""


class SizeError(ValidationError):
    pass


class NumericError(BraidflowError, ArithmeticError):
    pass


class IntegrationError(NumericError):
    def __init__(self, message, point_index=None, time=None):
        super().__init__(message)
        self.point_index = point_index
        self.time = time


class ClosureError(NumericError):
    """A trajectory that should be a loop does not close up."""


class CollisionError(NumericError):
    pass


class ResolutionError(NumericError):
    """Winding degree too far from an integer; the sample grid is too coarse."""


class LocallyConstantError(NumericError):
    """Action varies along a component of the fixed set."""


class StageError(BraidflowError):
    """A scenario pipeline stage failed; wraps the original error."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


class EmptyDocumentError(ValidationError):
    """Nothing to draw."""
