"""ADD / ADD-S pose errors, accuracy-threshold curves, and AUC reports."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidInputError
from .geometry import Pose, rotation_angle_between, translation_distance
from .objects import ObjectModel, ObjectRegistry

DEFAULT_MAX_THRESHOLD_M = 0.10
DEFAULT_MAX_THRESHOLD_RAD = np.pi / 2
DEFAULT_CURVE_STEPS = 1000


def add_metric(model: ObjectModel, gt: Pose, pred: Pose) -> float:
    """Mean distance between matched model points under the two poses."""
    d = np.linalg.norm(pred.apply(model.points) - gt.apply(model.points), axis=1)
    return float(np.mean(d))


def add_s_metric(model: ObjectModel, gt: Pose, pred: Pose) -> float:
    """Mean distance from each predicted-pose point to the closest gt-pose point."""
    pred_pts = pred.apply(model.points)
    gt_pts = gt.apply(model.points)
    dists, _ = cKDTree(gt_pts).query(pred_pts, k=1)
    return float(np.mean(dists))


@dataclass(frozen=True)
class PoseError:
    """All per-prediction error figures used by reports."""

    add: float
    add_s: float
    rotation_error: float
    translation_error: float

    def __post_init__(self):
        if self.add_s > self.add + 1e-12:
            raise InvalidInputError("ADD-S cannot exceed ADD")
        if min(self.add, self.add_s, self.rotation_error, self.translation_error) < 0:
            raise InvalidInputError("pose errors must be non-negative")


def pose_error(model: ObjectModel, gt: Pose, pred: Pose) -> PoseError:
    return PoseError(
        add=add_metric(model, gt, pred),
        add_s=add_s_metric(model, gt, pred),
        rotation_error=rotation_angle_between(gt.quat, pred.quat),
        translation_error=translation_distance(gt.translation, pred.translation),
    )


@dataclass(frozen=True)
class AccuracyCurve:
    """Accuracy-vs-threshold step curve with its normalized area."""

    thresholds: np.ndarray
    accuracy: np.ndarray
    auc: float

    def __post_init__(self):
        object.__setattr__(self, "thresholds", np.asarray(self.thresholds, dtype=float))
        object.__setattr__(self, "accuracy", np.asarray(self.accuracy, dtype=float))
        if np.any(np.diff(self.accuracy) < 0):
            raise InvalidInputError("accuracy must be non-decreasing in the threshold")
        if not 0.0 <= self.auc <= 1.0:
            raise InvalidInputError(f"auc must lie in [0, 1], got {self.auc}")


def accuracy_curve(errors, max_threshold: float, steps: int = DEFAULT_CURVE_STEPS) -> AccuracyCurve:
    """Fraction of errors below each threshold, plus trapezoidal AUC over [0, max].

    `errors` above `max_threshold` count as failures at every threshold.
    """
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise InvalidInputError("cannot build an accuracy curve from zero errors")
    if max_threshold <= 0:
        raise InvalidInputError(f"max_threshold must be positive, got {max_threshold}")
    if steps < 2:
        raise InvalidInputError(f"steps must be >= 2, got {steps}")
    thresholds = np.linspace(0.0, max_threshold, steps + 1)
    accuracy = np.mean(errors[None, :] < thresholds[:, None], axis=1)
    auc = float(np.trapz(accuracy, thresholds) / max_threshold)
    return AccuracyCurve(thresholds=thresholds, accuracy=accuracy, auc=auc)


@dataclass(frozen=True)
class ObjectScores:
    object_id: str
    count: int
    add_auc: float
    add_s_auc: float


@dataclass(frozen=True)
class DatasetScores:
    per_object: list[ObjectScores]
    all_row: ObjectScores
    max_threshold: float
    steps: int


def evaluate_dataset(predictions, registry: ObjectRegistry,
                     max_threshold: float = DEFAULT_MAX_THRESHOLD_M,
                     steps: int = DEFAULT_CURVE_STEPS,
                     posecnn_symmetric_convention: bool = False) -> DatasetScores:
    """Per-object and pooled ADD/ADD-S AUC for (object id, gt Pose, pred Pose) triples.

    The ALL row pools the raw per-prediction errors, so it is weighted by
    prediction count. With `posecnn_symmetric_convention`, symmetric objects
    contribute their ADD-S error to the ADD column as well.
    """
    add_errors: dict[str, list[float]] = {obj_id: [] for obj_id in registry.ids}
    adds_errors: dict[str, list[float]] = {obj_id: [] for obj_id in registry.ids}
    for obj_id, gt, pred in predictions:
        model = registry.get(obj_id)
        add = add_metric(model, gt, pred)
        add_s = add_s_metric(model, gt, pred)
        if posecnn_symmetric_convention and model.symmetric:
            add = add_s
        add_errors[obj_id].append(add)
        adds_errors[obj_id].append(add_s)

    per_object = []
    for obj_id in registry.ids:
        errs = add_errors[obj_id]
        if not errs:
            continue
        per_object.append(ObjectScores(
            object_id=obj_id,
            count=len(errs),
            add_auc=accuracy_curve(errs, max_threshold, steps).auc,
            add_s_auc=accuracy_curve(adds_errors[obj_id], max_threshold, steps).auc,
        ))
    pooled_add = [e for obj_id in registry.ids for e in add_errors[obj_id]]
    pooled_adds = [e for obj_id in registry.ids for e in adds_errors[obj_id]]
    if not pooled_add:
        raise InvalidInputError("evaluate_dataset needs at least one prediction")
    all_row = ObjectScores(
        object_id="ALL",
        count=len(pooled_add),
        add_auc=accuracy_curve(pooled_add, max_threshold, steps).auc,
        add_s_auc=accuracy_curve(pooled_adds, max_threshold, steps).auc,
    )
    return DatasetScores(per_object=per_object, all_row=all_row,
                         max_threshold=max_threshold, steps=steps)
