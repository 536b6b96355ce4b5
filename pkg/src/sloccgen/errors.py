"""Exception hierarchy shared by all modules."""


class SloccError(Exception):
    """Base class for every error raised by this package."""


class NonSquare(SloccError, ValueError):
    pass


class OrderTooLarge(SloccError, ValueError):
    pass


class NotNormalized(SloccError, ValueError):
    """A deformed qubit violates unitarity (squared amplitudes do not sum to 1)."""

    def __init__(self, message, qubit=None):
        super().__init__(message)
        self.qubit = qubit


class SchemeFormatError(SloccError, ValueError):
    """Malformed scheme file or scheme fields."""


class VanishingState(SloccError):
    """Every post-selected amplitude is zero: post-selection never succeeds."""


class DegenerateNorm(SloccError):
    """The deformed N-particle state has (numerically) zero norm."""


class DimensionMismatch(SloccError, ValueError):
    pass


class UnsupportedClass(SloccError, ValueError):
    pass


class OddNUnsupported(SloccError, ValueError):
    pass


class TooSmall(SloccError, ValueError):
    pass


class EmptyResult(SloccError):
    """No sampled scheme reached the fidelity threshold."""
