"""Training losses: masked depth L1, label cross entropy, point-matching pose
loss, quaternion norm regularizer, and quaternion inner-product loss, plus
their weighted sum.

All functions take torch tensors and are differentiable; gradient
correctness is pinned by finite-difference tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn.functional as F

from .errors import InvalidInputError

LOSS_TERMS = ("depth", "label", "pose", "reg", "inner_prod")
DEFAULT_WEIGHTS = {name: 1.0 for name in LOSS_TERMS}


def quat_to_matrix_t(q: torch.Tensor) -> torch.Tensor:
    """Differentiable quaternion (w, x, y, z) to rotation matrix; normalizes first."""
    n = torch.linalg.norm(q)
    if not torch.isfinite(n) or n < 1e-12:
        raise InvalidInputError("cannot build a rotation from a zero-norm quaternion")
    w, x, y, z = q / n
    row0 = torch.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)])
    row1 = torch.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)])
    row2 = torch.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)])
    return torch.stack([row0, row1, row2])


def pose_loss(model_points: torch.Tensor, q_pred: torch.Tensor, t_pred: torch.Tensor,
              q_gt: torch.Tensor, t_gt: torch.Tensor, symmetric: bool = False) -> torch.Tensor:
    """Mean squared distance between model points under predicted vs gt pose.

    For symmetric objects each predicted point is matched to its nearest
    gt-transformed point instead of the corresponding one. Both quaternions
    are normalized before the matrix conversion; the raw prediction norm is
    handled separately by `quat_reg_loss`.
    """
    pts = model_points
    pred_pts = pts @ quat_to_matrix_t(q_pred).T + t_pred
    gt_pts = pts @ quat_to_matrix_t(q_gt).T + t_gt
    if symmetric:
        sq = torch.cdist(pred_pts, gt_pts).pow(2)
        return sq.min(dim=1).values.mean()
    return (pred_pts - gt_pts).pow(2).sum(dim=1).mean()


def quat_reg_loss(q_pred: torch.Tensor) -> torch.Tensor:
    """|1 - ||q|||, zero exactly on the unit sphere."""
    return torch.abs(1.0 - torch.linalg.norm(q_pred))


def quat_inner_prod_loss(q_pred: torch.Tensor, q_gt: torch.Tensor,
                         double_cover_abs: bool = False) -> torch.Tensor:
    """1 - <q_pred, q_gt> on the raw prediction.

    The plain inner product penalizes the antipodal twin of the gt rotation;
    `double_cover_abs` switches to 1 - |<q_pred, q_gt>| so both signs score
    alike.
    """
    dot = torch.dot(q_pred, q_gt)
    if double_cover_abs:
        dot = torch.abs(dot)
    return 1.0 - dot


def depth_loss(pred_depth: torch.Tensor, gt_depth: torch.Tensor,
               valid_mask: torch.Tensor) -> torch.Tensor:
    """L1 depth error averaged over valid pixels only."""
    if pred_depth.shape != gt_depth.shape or pred_depth.shape != valid_mask.shape:
        raise InvalidInputError(
            f"depth map shapes disagree: {tuple(pred_depth.shape)} vs "
            f"{tuple(gt_depth.shape)} vs {tuple(valid_mask.shape)}")
    mask = valid_mask.bool()
    if not bool(mask.any()):
        raise InvalidInputError("depth loss needs at least one valid pixel")
    return torch.abs(pred_depth[mask] - gt_depth[mask]).mean()


def label_loss(pred_logits: torch.Tensor, gt_labels: torch.Tensor) -> torch.Tensor:
    """Mean per-pixel softmax cross entropy; logits are (H, W, C), labels (H, W)."""
    if pred_logits.ndim != 3:
        raise InvalidInputError(f"expected (H, W, C) logits, got shape {tuple(pred_logits.shape)}")
    num_classes = pred_logits.shape[-1]
    labels = gt_labels.long()
    if labels.numel() and (labels.min() < 0 or labels.max() >= num_classes):
        raise InvalidInputError(
            f"labels must lie in [0, {num_classes - 1}], got range "
            f"[{int(labels.min())}, {int(labels.max())}]")
    flat_logits = pred_logits.reshape(-1, num_classes)
    return F.cross_entropy(flat_logits, labels.reshape(-1))


@dataclass
class LossBreakdown:
    """The five loss terms, their weights, and the weighted total (a tensor
    while gradients are still needed)."""

    depth: torch.Tensor
    label: torch.Tensor
    pose: torch.Tensor
    reg: torch.Tensor
    inner_prod: torch.Tensor
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    total: torch.Tensor = None

    def __post_init__(self):
        if self.total is None:
            terms = {name: getattr(self, name) for name in LOSS_TERMS}
            self.total = sum(self.weights[name] * term for name, term in terms.items())

    def as_floats(self) -> dict:
        out = {name: float(getattr(self, name).detach()) for name in LOSS_TERMS}
        out["total"] = float(self.total.detach())
        return out


def total_loss(depth: torch.Tensor, label: torch.Tensor, pose: torch.Tensor,
               reg: torch.Tensor, inner_prod: torch.Tensor,
               weights: dict | None = None) -> LossBreakdown:
    """Weighted sum of the five terms (all weights default to 1)."""
    w = dict(DEFAULT_WEIGHTS)
    if weights:
        unknown = set(weights) - set(LOSS_TERMS)
        if unknown:
            raise InvalidInputError(f"unknown loss weights: {sorted(unknown)}")
        w.update(weights)
    return LossBreakdown(depth=depth, label=label, pose=pose, reg=reg,
                         inner_prod=inner_prod, weights=w)
