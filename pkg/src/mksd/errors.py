"""Exception types shared across the package."""


class MksdError(Exception):
    """Base class for all package errors."""


class SingularChartPoint(MksdError):
    """Chart operation requested on the measure-zero singular set."""


class GimbalLock(MksdError):
    """Rotation matrix lies on the Euler chart's singular set (|X33| ~ 1)."""


class EmptyReferenceSample(MksdError):
    """Zeroth-order Stein kernel needs a nonempty reference sample."""


class TooFewSamples(MksdError):
    """Statistic requires more data points than were given."""


class EmptyGrid(MksdError):
    """Parameter selection called with an empty candidate grid."""


class EigendecompositionFailure(MksdError):
    """Symmetric eigendecomposition of the Stein kernel matrix failed."""


class QuadratureUnderResolved(MksdError):
    """Refining the quadrature grid still moves the result too much."""


class ParseError(MksdError):
    """Malformed input data row."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class InvalidRotation(MksdError):
    """Ingested 3x3 block is not a rotation matrix."""

    def __init__(self, message, line=None, defect=None):
        detail = message
        if line is not None:
            detail = f"line {line}: {detail}"
        if defect is not None:
            detail = f"{detail} (Frobenius defect {defect:.3g})"
        super().__init__(detail)
        self.line = line
        self.defect = defect


class LowAcceptanceWarning(UserWarning):
    """Rejection sampler acceptance rate fell below the probe threshold."""
