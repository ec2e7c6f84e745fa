"""Temporal fusion cells: the plain recurrent encoder and the ConvGRU variant.

Both take the warped previous memory and the current ROI feature and emit a
new memory grid plus the fused features consumed by the pose regressor.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from ..errors import ShapeError
from .config import EncoderConfig


def _check_channels(warped_mem: torch.Tensor, z_t: torch.Tensor, cfg: EncoderConfig):
    if warped_mem.shape[0] != cfg.memory_channels:
        raise ShapeError(
            f"memory has {warped_mem.shape[0]} channels, configured {cfg.memory_channels}")
    if z_t.shape[0] != cfg.fusion_channels:
        raise ShapeError(
            f"ROI feature has {z_t.shape[0]} channels, configured {cfg.fusion_channels}")
    if warped_mem.shape[1:] != z_t.shape[1:]:
        raise ShapeError(f"grid sizes disagree: {tuple(warped_mem.shape)} vs {tuple(z_t.shape)}")


class TemporalEncoder(nn.Module):
    """Two 3x3 convolutions over the concatenated (memory, current) grids;
    the output splits into the next memory and the fused features."""

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        in_ch = cfg.memory_channels + cfg.fusion_channels
        out_ch = cfg.memory_channels + cfg.fused_channels
        hidden = out_ch // 2
        self.conv1 = nn.Conv2d(in_ch, hidden, 3, padding=1)
        self.conv2 = nn.Conv2d(hidden, out_ch, 3, padding=1)

    def forward(self, warped_mem: torch.Tensor, z_t: torch.Tensor):
        _check_channels(warped_mem, z_t, self.cfg)
        x = torch.cat([warped_mem, z_t], dim=0).unsqueeze(0)
        y = self.conv2(F.relu(self.conv1(x)))[0]
        mem = torch.tanh(y[: self.cfg.memory_channels])
        fused = F.relu(y[self.cfg.memory_channels:])
        return mem, fused


class ConvGRUTemporal(nn.Module):
    """Convolutional GRU whose hidden state is the memory grid, plus a fusion
    convolution producing the regressor features."""

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        in_ch = cfg.fusion_channels + cfg.memory_channels
        self.gates = nn.Conv2d(in_ch, 2 * cfg.memory_channels, 3, padding=1)
        self.candidate = nn.Conv2d(in_ch, cfg.memory_channels, 3, padding=1)
        self.fuse = nn.Conv2d(cfg.memory_channels + cfg.fusion_channels,
                              cfg.fused_channels, 3, padding=1)

    def forward(self, warped_mem: torch.Tensor, z_t: torch.Tensor):
        _check_channels(warped_mem, z_t, self.cfg)
        x = z_t.unsqueeze(0)
        h = warped_mem.unsqueeze(0)
        ru = torch.sigmoid(self.gates(torch.cat([x, h], dim=1)))
        r, u = torch.split(ru, self.cfg.memory_channels, dim=1)
        cand = torch.tanh(self.candidate(torch.cat([x, r * h], dim=1)))
        new_h = u * h + (1 - u) * cand
        fused = F.relu(self.fuse(torch.cat([new_h, x], dim=1)))
        return new_h[0], fused[0]

    def gate_activations(self, warped_mem: torch.Tensor, z_t: torch.Tensor):
        """Reset/update gate values, exposed for range checks."""
        _check_channels(warped_mem, z_t, self.cfg)
        x = torch.cat([z_t, warped_mem], dim=0).unsqueeze(0)
        ru = torch.sigmoid(self.gates(x))
        r, u = torch.split(ru, self.cfg.memory_channels, dim=1)
        return r[0], u[0]


def build_temporal(cfg: EncoderConfig) -> nn.Module:
    """Variant `none` shares the baseline cell; the model feeds it zero memory."""
    if cfg.temporal_variant == "convgru":
        return ConvGRUTemporal(cfg)
    return TemporalEncoder(cfg)
