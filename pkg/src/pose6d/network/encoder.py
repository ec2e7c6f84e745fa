"""Frame encoder: convolutional backbone plus depth and label decoders."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from ..errors import ShapeError
from .config import EncoderConfig


@dataclass
class FrameFeatures:
    """Per-frame outputs: backbone grid, full-resolution depth/label maps,
    and the penultimate depth-decoder map used for ROI fusion."""

    z3: torch.Tensor           # (C, h, w) backbone feature grid
    depth: torch.Tensor        # (H, W) meters, strictly positive
    label_logits: torch.Tensor  # (n + 1, H, W)
    depth_penult: torch.Tensor  # (C_p, H/2, W/2)
    image_size: tuple          # (H, W)


class _Decoder(nn.Module):
    """Three conv stages with x2 upsampling back to input resolution."""

    def __init__(self, in_channels: int, mid_channels: tuple, out_channels: int):
        super().__init__()
        c1, c2 = mid_channels
        self.conv1 = nn.Conv2d(in_channels, c1, 3, padding=1)
        self.conv2 = nn.Conv2d(c1, c2, 3, padding=1)
        self.conv3 = nn.Conv2d(c2, out_channels, 3, padding=1)

    def forward(self, x: torch.Tensor):
        x = F.relu(self.conv1(F.interpolate(x, scale_factor=2, mode="bilinear", align_corners=False)))
        penult = F.relu(self.conv2(F.interpolate(x, scale_factor=2, mode="bilinear", align_corners=False)))
        out = self.conv3(F.interpolate(penult, scale_factor=2, mode="bilinear", align_corners=False))
        return out, penult


class FrameEncoder(nn.Module):
    """Backbone stages (leading ones optionally frozen) feeding two decoders."""

    def __init__(self, cfg: EncoderConfig, num_classes: int):
        super().__init__()
        self.cfg = cfg
        self.num_classes = num_classes
        stages = []
        in_ch = 3
        for out_ch, stride in zip(cfg.channels, cfg.strides):
            stages.append(nn.Sequential(nn.Conv2d(in_ch, out_ch, 3, stride=stride, padding=1), nn.ReLU()))
            in_ch = out_ch
        self.stages = nn.ModuleList(stages)
        self.depth_decoder = _Decoder(cfg.channels[-1], cfg.decoder_channels, 1)
        self.label_decoder = _Decoder(cfg.channels[-1], cfg.decoder_channels, num_classes + 1)
        for i in range(cfg.frozen_stages):
            for p in self.stages[i].parameters():
                p.requires_grad_(False)

    def frozen_parameters(self):
        for i in range(self.cfg.frozen_stages):
            yield from self.stages[i].parameters()

    def forward(self, image: torch.Tensor) -> FrameFeatures:
        """Encode one (3, H, W) image; H and W must be divisible by the stride."""
        if image.ndim != 3 or image.shape[0] != 3:
            raise ShapeError(f"expected a (3, H, W) image, got {tuple(image.shape)}")
        h, w = image.shape[1:]
        stride = self.cfg.total_stride
        if h % stride or w % stride:
            raise ShapeError(f"image dims ({h}, {w}) must be divisible by the backbone stride {stride}")
        x = image.unsqueeze(0)
        for stage in self.stages:
            x = stage(x)
        depth_out, depth_penult = self.depth_decoder(x)
        label_out, _ = self.label_decoder(x)
        # softplus keeps predicted depth positive for the geometric warp
        depth = F.softplus(depth_out[0, 0]) + 1e-4
        return FrameFeatures(
            z3=x[0],
            depth=depth,
            label_logits=label_out[0],
            depth_penult=depth_penult[0],
            image_size=(int(h), int(w)),
        )
