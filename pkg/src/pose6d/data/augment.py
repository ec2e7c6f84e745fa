"""Train-time augmentation: color jitter, pixel noise, and box dilation.

Augmentation never touches poses, depth, or labels.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .records import FrameRecord


@dataclass(frozen=True)
class AugmentConfig:
    enabled: bool = True
    color_jitter: float = 0.2   # max relative brightness/contrast/saturation change
    noise_sigma: float = 0.02   # additive Gaussian, in [0, 1] pixel units
    bbox_extend: float = 0.1    # max relative width/height dilation


def augment_frame(frame: FrameRecord, rng: np.random.Generator,
                  cfg: AugmentConfig = AugmentConfig()) -> FrameRecord:
    """Jitter brightness, contrast, and saturation, then add pixel noise."""
    if not cfg.enabled:
        return frame
    img = frame.rgb.astype(np.float32)
    j = cfg.color_jitter
    brightness, contrast, saturation = 1.0 + rng.uniform(-j, j, size=3)
    img = img * brightness
    img = (img - img.mean()) * contrast + img.mean()
    gray = img.mean(axis=2, keepdims=True)
    img = gray + (img - gray) * saturation
    if cfg.noise_sigma > 0:
        img = img + rng.normal(0.0, cfg.noise_sigma, size=img.shape)
    img = np.clip(img, 0.0, 1.0).astype(np.float32)
    return replace(frame, rgb=img)


def augment_bbox(bbox, rng: np.random.Generator, image_size,
                 max_extend: float = 0.1) -> np.ndarray:
    """Scale width and height independently by factors in [1, 1 + max_extend],
    keeping the center fixed and clipping to the image."""
    x0, y0, x1, y1 = np.asarray(bbox, dtype=float).reshape(4)
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    half_w = (x1 - x0) / 2.0 * (1.0 + rng.uniform(0.0, max_extend))
    half_h = (y1 - y0) / 2.0 * (1.0 + rng.uniform(0.0, max_extend))
    h, w = image_size
    out = np.array([
        max(0.0, cx - half_w), max(0.0, cy - half_h),
        min(float(w), cx + half_w), min(float(h), cy + half_h),
    ])
    return out
