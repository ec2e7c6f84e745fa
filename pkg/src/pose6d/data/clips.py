"""Clip construction: deterministic evaluation windows and random-stride
training samples."""

from __future__ import annotations

import numpy as np

from ..errors import DataError, InvalidInputError
from .records import Video, VideoClip

TRAIN_CLIP_LENGTH = 10
MAX_TRAIN_STRIDE = 10


def eval_clip_indices(num_frames: int, length: int = 10, stride: int = 2) -> list:
    """Non-overlapping stride-`stride` windows; a short tail becomes a short clip."""
    starts = range(0, num_frames, stride * length)
    windows = []
    for start in starts:
        idx = list(range(start, min(num_frames, start + stride * length), stride))
        if idx:
            windows.append(idx)
    return windows


def make_eval_clips(video: Video, length: int = 10, stride: int = 2) -> list:
    return [video.load_clip(idx, stride) for idx in eval_clip_indices(len(video), length, stride)]


def sample_train_clip(video: Video, rng: np.random.Generator,
                      length: int = TRAIN_CLIP_LENGTH,
                      max_stride: int = MAX_TRAIN_STRIDE) -> VideoClip:
    """A `length`-frame clip with uniform random stride in 1..max_stride and a
    random start; infeasible strides are redrawn."""
    n = len(video)
    if n < length:
        raise DataError(f"video '{video.id}' has {n} frames, need at least {length}")
    while True:
        stride = int(rng.integers(1, max_stride + 1))
        max_start = n - ((length - 1) * stride + 1)
        if max_start >= 0:
            break
    start = int(rng.integers(0, max_start + 1))
    indices = list(range(start, start + length * stride, stride))
    return video.load_clip(indices, stride)


def sample_stride(num_frames: int, rng: np.random.Generator,
                  length: int = TRAIN_CLIP_LENGTH,
                  max_stride: int = MAX_TRAIN_STRIDE) -> int:
    """The stride-draw law of `sample_train_clip`, exposed for distribution tests."""
    if num_frames < length:
        raise InvalidInputError(f"need at least {length} frames, got {num_frames}")
    while True:
        stride = int(rng.integers(1, max_stride + 1))
        if num_frames - ((length - 1) * stride + 1) >= 0:
            return stride
