"""Pose regression heads: disconnected translation and rotation branches."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from ..errors import InvalidInputError
from .config import EncoderConfig


class PoseRegressor(nn.Module):
    """Two disconnected fully connected branches over the flattened fused ROI.

    The translation branch ends in two separate linear layers: one emitting
    the per-class 2D center correction (2n values) and one the per-class
    depth (n values). The rotation branch emits per-class raw quaternions
    (4n values). No gradient path connects the branches above the fused
    features.
    """

    def __init__(self, cfg: EncoderConfig, num_classes: int):
        super().__init__()
        self.num_classes = num_classes
        in_dim = cfg.fused_channels * cfg.roi_size * cfg.roi_size
        hidden = cfg.regressor_hidden
        self.trans_fc = nn.Linear(in_dim, hidden)
        self.center_out = nn.Linear(hidden, 2 * num_classes)
        self.depth_out = nn.Linear(hidden, num_classes)
        self.rot_fc = nn.Linear(in_dim, hidden)
        self.quat_out = nn.Linear(hidden, 4 * num_classes)

    def forward(self, fused: torch.Tensor):
        """All-class outputs: delta_c (n, 2), tz (n,), quat (n, 4)."""
        flat = fused.reshape(-1)
        t_hidden = F.relu(self.trans_fc(flat))
        delta_c = self.center_out(t_hidden).reshape(self.num_classes, 2)
        tz = self.depth_out(t_hidden)
        r_hidden = F.relu(self.rot_fc(flat))
        quat = self.quat_out(r_hidden).reshape(self.num_classes, 4)
        return delta_c, tz, quat

    def regress_pose(self, fused: torch.Tensor, class_index: int):
        """The (delta_c, tz, raw quat) slice for one object class."""
        if not 0 <= class_index < self.num_classes:
            raise InvalidInputError(
                f"class index {class_index} out of range for {self.num_classes} classes")
        delta_c, tz, quat = self.forward(fused)
        return delta_c[class_index], tz[class_index], quat[class_index]
