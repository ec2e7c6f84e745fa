"""ROI feature extraction: bilinear box resampling and feature fusion.

Boxes are (x0, y0, x1, y1) in image pixels. Sampling uses the half-pixel
convention throughout: pixel (i, j) has its center at (j + 0.5, i + 0.5),
and a feature map of stride s is addressed at image coords divided by s.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

from ..errors import InvalidRoiError, ShapeError
from .encoder import FrameFeatures


def validate_box(box, image_size) -> np.ndarray:
    """Check the box has positive area and intersects the image."""
    b = np.asarray(box, dtype=float).reshape(4)
    x0, y0, x1, y1 = b
    if not np.all(np.isfinite(b)):
        raise InvalidRoiError(f"box must be finite, got {b.tolist()}")
    if x1 <= x0 or y1 <= y0:
        raise InvalidRoiError(f"box must have positive area, got {b.tolist()}")
    h, w = image_size
    if x1 <= 0 or y1 <= 0 or x0 >= w or y0 >= h:
        raise InvalidRoiError(f"box {b.tolist()} does not intersect a {w}x{h} image")
    return b


def box_center(box) -> tuple[float, float]:
    b = np.asarray(box, dtype=float).reshape(4)
    return float((b[0] + b[2]) / 2.0), float((b[1] + b[3]) / 2.0)


def roi_grid(box, k: int) -> np.ndarray:
    """Image-space (k, k, 2) xy coordinates of the ROI cell centers."""
    x0, y0, x1, y1 = np.asarray(box, dtype=float).reshape(4)
    xs = x0 + (np.arange(k) + 0.5) * (x1 - x0) / k
    ys = y0 + (np.arange(k) + 0.5) * (y1 - y0) / k
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx, gy], axis=-1)


def sample_map(feature_map: torch.Tensor, points_xy: torch.Tensor, stride: float) -> torch.Tensor:
    """Bilinearly sample a (C, Hf, Wf) map at image-space xy points.

    Points outside the map sample zeros. Returns (C, *points_xy.shape[:-1]).
    """
    if feature_map.ndim != 3:
        raise ShapeError(f"expected (C, H, W) feature map, got {tuple(feature_map.shape)}")
    hf, wf = feature_map.shape[1:]
    pts = points_xy.to(feature_map.dtype)
    norm_x = 2.0 * (pts[..., 0] / stride) / wf - 1.0
    norm_y = 2.0 * (pts[..., 1] / stride) / hf - 1.0
    grid = torch.stack([norm_x, norm_y], dim=-1).reshape(1, 1, -1, 2)
    sampled = F.grid_sample(feature_map.unsqueeze(0), grid, mode="bilinear",
                            padding_mode="zeros", align_corners=False)
    return sampled[0, :, 0, :].reshape(feature_map.shape[0], *points_xy.shape[:-1])


def roi_fuse(features: FrameFeatures, box, k: int, backbone_stride: int,
             penult_stride: int) -> torch.Tensor:
    """Resample the backbone map and penultimate depth map over the box and
    concatenate them into a (C', k, k) ROI feature."""
    b = validate_box(box, features.image_size)
    grid = torch.as_tensor(roi_grid(b, k), dtype=features.z3.dtype)
    z3_roi = sample_map(features.z3, grid, float(backbone_stride))
    depth_roi = sample_map(features.depth_penult, grid, float(penult_stride))
    return torch.cat([z3_roi, depth_roi], dim=0)


def depth_roi(features: FrameFeatures, box, k: int) -> torch.Tensor:
    """(k, k) grid of the predicted depth map sampled over the box."""
    b = validate_box(box, features.image_size)
    grid = torch.as_tensor(roi_grid(b, k), dtype=features.depth.dtype)
    return sample_map(features.depth.unsqueeze(0), grid, 1.0)[0]
