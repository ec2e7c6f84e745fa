"""Exception types shared across the package."""


class Pose6dError(Exception):
    """Base class for package-specific failures."""


class InvalidInputError(Pose6dError, ValueError):
    """A caller-supplied value violates a documented precondition."""


class BehindCameraError(InvalidInputError):
    """Point has non-positive depth along the optical axis."""


class InvalidRoiError(InvalidInputError):
    """Degenerate or out-of-image region of interest."""


class ShapeError(InvalidInputError):
    """Array shape incompatible with the configured architecture."""


class DataError(Pose6dError):
    """Dataset, manifest, or model-file content is unusable."""


class CheckpointError(Pose6dError):
    """Checkpoint archive is missing, corrupt, or incompatible."""


class NumericalError(Pose6dError):
    """Computation produced NaN/Inf or otherwise diverged."""
