"""Exception hierarchy shared by every module of the package."""

__all__ = [
    "RrrError",
    "ValidationError",
    "NonFiniteInput",
    "DegenerateDesign",
    "BadSubsampleSize",
    "UnsortedGrid",
    "ShapeMismatch",
    "BadSplit",
    "FoldTooSmall",
    "TooFewSubsamples",
    "ZeroSpectrum",
    "DegenerateSignal",
    "SingularCovariance",
    "AllScoresInfinite",
    "NoStableLambda",
]


class RrrError(Exception):
    """Base class for all package errors."""


class ValidationError(RrrError, ValueError):
    """Input rejected before any computation was attempted."""


class NonFiniteInput(ValidationError):
    pass


class DegenerateDesign(ValidationError):
    pass


class BadSubsampleSize(ValidationError):
    pass


class UnsortedGrid(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class BadSplit(ValidationError):
    pass


class FoldTooSmall(ValidationError):
    pass


class TooFewSubsamples(ValidationError):
    pass


class ZeroSpectrum(RrrError):
    """The projected response has no positive singular value."""


class DegenerateSignal(RrrError):
    pass


class SingularCovariance(RrrError):
    pass


class AllScoresInfinite(RrrError):
    """Every grid point of an information criterion hit the +inf sentinel."""


class NoStableLambda(RrrError):
    """No grid point reaches the instability threshold.

    Attributes
    ----------
    fallback_index : int
        Grid index of the smallest cumulative-minimum instability.
    fallback_lambda : float
        The tuning parameter at ``fallback_index``. Advisory only.
    """

    def __init__(self, message, fallback_index, fallback_lambda):
        super().__init__(message)
        self.fallback_index = int(fallback_index)
        self.fallback_lambda = float(fallback_lambda)
