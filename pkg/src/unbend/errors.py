"""Exception hierarchy shared by all unbend modules."""


class UnbendError(Exception):
    """Base class for all errors raised by this package."""


class MetadataMissing(UnbendError):
    """Volume sidecar file is absent or lacks a required key."""


class SizeMismatch(UnbendError):
    """Raw data file length disagrees with the declared dims/dtype."""


class UnsupportedScalarType(UnbendError):
    """Sidecar declares a dtype other than u8, u16 or f32."""


class EmptyMask(UnbendError):
    """No voxel survived thresholding (or an empty mask was passed on)."""


class DilationBudgetExceeded(UnbendError):
    """Mask components failed to merge within max(dims) dilation rounds."""


class Disconnected(UnbendError):
    """Mesh vertex graph is not a single connected component."""


class SolverDiverged(UnbendError):
    """Conjugate gradient failed to reach the requested residual."""


class DegenerateField(UnbendError):
    """Fewer than two isovalues produced level-set crossings."""


class DegenerateTangent(UnbendError):
    """Consecutive curve vertices coincide; no tangent direction exists."""


class EmptyInput(UnbendError):
    """An operation requiring at least one element received none."""


class NonConvergence(UnbendError):
    """Prism subdivision exceeded the skeleton vertex count."""


class OutOfRange(UnbendError):
    """Parameter t or an index lies outside the rig's valid range."""


class AntipodalNormals(UnbendError):
    """Consecutive keyframe normals are opposite; slerp is undefined."""


class LastTwoKeyframes(UnbendError):
    """A rig must keep at least two keyframes."""


class DoesNotFit(UnbendError):
    """Requested synthetic shape does not fit in the target grid."""


class DimsMismatch(UnbendError):
    """Two volumes must share dims for voxelwise comparison."""


class VersionUnsupported(UnbendError):
    """Session file declares an unknown format_version."""


class SchemaInvalid(UnbendError):
    """Session or rig payload violates schema or type invariants."""


class IoFailure(UnbendError):
    """Filesystem read or write failed."""
