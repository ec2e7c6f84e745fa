"""Geometry-driven warping of the previous frame's memory features.

Each current ROI cell is back-projected with the predicted depth, carried
into the previous camera frame through the relative camera transform,
re-projected, and the memory grid is bilinearly sampled there. Cells that
land outside the previous ROI (or behind the camera) sample zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from ..geometry import CameraIntrinsics, relative_transform
from ..errors import InvalidInputError
from .roi import roi_grid

_MIN_DEPTH = 1e-6


@dataclass
class TemporalState:
    """Memory features carried between frames for one tracked object."""

    memory: torch.Tensor      # (C_mem, k, k) over the ROI
    extrinsic: np.ndarray     # world-to-camera 4x4 of the producing frame
    box: np.ndarray           # ROI of the producing frame, image pixels


def warp_previous_features(state: TemporalState, curr_extrinsic: np.ndarray,
                           curr_box, curr_depth_roi: torch.Tensor,
                           intrinsics: CameraIntrinsics) -> torch.Tensor:
    """Resample the remembered features into the current ROI grid."""
    mem = state.memory
    k = mem.shape[-1]
    dtype = mem.dtype

    grid = torch.as_tensor(roi_grid(curr_box, k), dtype=dtype)
    z = curr_depth_roi.to(dtype)
    x3 = (grid[..., 0] - intrinsics.px) / intrinsics.fx * z
    y3 = (grid[..., 1] - intrinsics.py) / intrinsics.fy * z

    to_prev = relative_transform(curr_extrinsic, state.extrinsic)
    rot = torch.as_tensor(to_prev[:3, :3], dtype=dtype)
    trans = torch.as_tensor(to_prev[:3, 3], dtype=dtype)
    pts = torch.stack([x3, y3, z], dim=-1)
    prev = pts @ rot.T + trans

    zp = prev[..., 2]
    safe_z = torch.clamp(zp, min=_MIN_DEPTH)
    u = intrinsics.fx * prev[..., 0] / safe_z + intrinsics.px
    v = intrinsics.fy * prev[..., 1] / safe_z + intrinsics.py

    x0, y0, x1, y1 = (float(c) for c in np.asarray(state.box, dtype=float).reshape(4))
    norm_x = 2.0 * (u - x0) / (x1 - x0) - 1.0
    norm_y = 2.0 * (v - y0) / (y1 - y0) - 1.0
    behind = zp <= _MIN_DEPTH
    norm_x = torch.where(behind, torch.full_like(norm_x, -2.0), norm_x)
    norm_y = torch.where(behind, torch.full_like(norm_y, -2.0), norm_y)

    sample_grid = torch.stack([norm_x, norm_y], dim=-1).unsqueeze(0)
    warped = F.grid_sample(mem.unsqueeze(0), sample_grid, mode="bilinear",
                           padding_mode="zeros", align_corners=False)
    return warped[0]


def conjugation_warp(state: TemporalState, curr_extrinsic: np.ndarray) -> torch.Tensor:
    """Literal low-dimensional ablation: conjugate the first 16 memory channels
    of every cell as a 4x4 matrix by the camera transforms; the remaining
    channels pass through unchanged."""
    mem = state.memory
    if mem.shape[0] < 16:
        raise InvalidInputError("conjugation warp needs at least 16 memory channels")
    dtype = mem.dtype
    k = mem.shape[-1]
    m_curr = torch.as_tensor(curr_extrinsic, dtype=dtype)
    m_prev_inv = torch.as_tensor(np.linalg.inv(np.asarray(state.extrinsic, dtype=float)), dtype=dtype)
    blocks = mem[:16].permute(1, 2, 0).reshape(k * k, 4, 4)
    conjugated = m_curr @ blocks @ m_prev_inv
    out = mem.clone()
    out[:16] = conjugated.reshape(k, k, 16).permute(2, 0, 1)
    return out
