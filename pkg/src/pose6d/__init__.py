"""Video 6D object pose estimation with recurrent temporal feature fusion."""

from .errors import (
    BehindCameraError,
    CheckpointError,
    DataError,
    InvalidInputError,
    InvalidRoiError,
    NumericalError,
    Pose6dError,
    ShapeError,
)
from .geometry import (
    CameraIntrinsics,
    Pose,
    project_center,
    quat_normalize,
    quat_to_matrix,
    recover_translation,
    relative_transform,
    rotation_angle_between,
)
from .objects import ObjectModel, ObjectRegistry, load_registry, subsample_points
from .metrics import (
    AccuracyCurve,
    PoseError,
    accuracy_curve,
    add_metric,
    add_s_metric,
    evaluate_dataset,
)
from .estimator import PoseSequenceEstimator

__version__ = "0.1.0"

__all__ = [
    "BehindCameraError", "CheckpointError", "DataError", "InvalidInputError",
    "InvalidRoiError", "NumericalError", "Pose6dError", "ShapeError",
    "CameraIntrinsics", "Pose", "project_center", "quat_normalize", "quat_to_matrix",
    "recover_translation", "relative_transform", "rotation_angle_between",
    "ObjectModel", "ObjectRegistry", "load_registry", "subsample_points",
    "AccuracyCurve", "PoseError", "accuracy_curve", "add_metric", "add_s_metric",
    "evaluate_dataset",
    "PoseSequenceEstimator",
    "__version__",
]
