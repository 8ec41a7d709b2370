"""Exception hierarchy shared by all modules."""


class InvSfmError(Exception):
    """Base class for every error raised by this package."""


class DegenerateConfiguration(InvSfmError):
    """Point set too degenerate for the requested computation."""


class DegenerateCrossSection(DegenerateConfiguration):
    """The moving-frame normalization equations have no regular solution."""


class RayOrthogonalToAxis(DegenerateConfiguration):
    """A ray is (nearly) orthogonal to, or behind, the optical axis in the zoom action."""


class OrthogonalRays(DegenerateConfiguration):
    """A dot-product denominator of an invariant vanishes."""


class CollinearBaseRays(DegenerateConfiguration):
    """The two rays spanning the frame are parallel."""


class SingularFocalFactor(DegenerateConfiguration):
    """The zoom factor 1 + m - m**2 vanishes (m is the golden ratio)."""


class InvalidLambda(InvSfmError, ValueError):
    """A depth factor (or zoom factor) is <= -1."""


class VariantMismatch(InvSfmError, ValueError):
    pass


class LengthMismatch(InvSfmError, ValueError):
    pass


class PointBehindCamera(InvSfmError):
    pass


class EvaluationError(InvSfmError):
    """An invariant could not be evaluated while assembling residuals."""

    def __init__(self, message, picture=None, cause=None):
        super().__init__(message)
        self.picture = picture
        self.cause = cause


class NonFiniteResidual(InvSfmError):
    pass


class AllStepsRejected(InvSfmError):
    pass


class InsufficientData(InvSfmError):
    pass


class DegenerateTargets(InvSfmError):
    pass


class FormatError(InvSfmError, ValueError):
    """Malformed tracks, scene or report file."""
