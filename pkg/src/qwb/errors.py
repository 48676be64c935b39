"""Exception hierarchy shared by all qwb modules."""


class QwbError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(QwbError):
    """Bad user input (malformed matrices, measures, configs)."""


class NumericalError(QwbError):
    """A computation could not be completed within its numerical contract."""


class Singular(ValidationError):
    """Defining matrix is not invertible."""


class NotInvolutive(ValidationError):
    """F * conj(F) is not plus or minus the identity within tolerance."""


class KacBoundary(ValidationError):
    """Tr(F*F) <= 2, the excluded deformation values q = +1 or q = -1."""


class OutOfRange(ValidationError):
    """Scalar parameter outside its admissible interval."""


class NotInFusion(ValidationError):
    """Requested label does not occur in the given tensor product."""


class NotGenerating(ValidationError):
    """Measure does not generate the whole label set."""


class TruncationTooSmall(NumericalError):
    """Requested entry lies outside the valid truncation window."""

class BudgetExceeded(NumericalError):
    """Construction would exceed the configured memory/size budget."""


class CategoryTooSmall(NumericalError):
    """Category was not built far enough for the requested operation."""


class NotTransient(NumericalError):
    """Tail certificate failed: the walk does not look transient."""


class DivisionByZero(NumericalError):
    """Green function vanishes where a Martin normalization needs it."""
