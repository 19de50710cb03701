"""Exception types shared across the package."""


class LabError(ValueError):
    """Base class for mrlab errors."""


class ParameterError(LabError):
    """An argument is outside the admissible range of the operation."""


class StructuralError(LabError):
    """Shapes, layouts or index couplings do not fit together."""


class SingularityError(LabError):
    """A resolvent parameter hit (or nearly hit) the spectrum."""


class SequenceOverflowError(LabError, OverflowError):
    """A multiplier sequence left double-precision range.

    Carries the first 1-based index whose value is not representable.
    """

    def __init__(self, index, message=None):
        self.index = int(index)
        super().__init__(message or f"sequence value overflows float64 at index {index}")


class InvariantViolation(AssertionError):
    """A mathematically guaranteed inequality or identity failed numerically."""
