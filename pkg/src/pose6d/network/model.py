"""The end-to-end pose network: encoder, ROI fusion, temporal block, heads.

`forward_clip` runs encode -> roi_fuse -> warp -> temporal step -> regress
for every object in every frame, threading one TemporalState per object.
An object missing its box in a frame has its state reset to zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from ..errors import InvalidInputError
from ..geometry import CameraIntrinsics, Pose
from .config import EncoderConfig
from .encoder import FrameEncoder, FrameFeatures
from .heads import PoseRegressor
from .roi import box_center, depth_roi, roi_fuse, validate_box
from .temporal import build_temporal
from .warp import TemporalState, conjugation_warp, warp_previous_features


def recover_translation_t(c_box, delta_c: torch.Tensor, tz: torch.Tensor,
                          intrinsics: CameraIntrinsics) -> torch.Tensor:
    """Differentiable counterpart of geometry.recover_translation."""
    tx = (c_box[0] + delta_c[0] - intrinsics.px) * tz / intrinsics.fx
    ty = (c_box[1] + delta_c[1] - intrinsics.py) * tz / intrinsics.fy
    return torch.stack([tx, ty, tz])


@dataclass
class ObjectForward:
    """Raw head outputs and the assembled translation for one object."""

    object_id: str
    class_index: int
    box: np.ndarray
    raw_quat: torch.Tensor    # (4,) unnormalized
    delta_c: torch.Tensor     # (2,) pixels
    tz: torch.Tensor          # scalar meters
    translation: torch.Tensor  # (3,) meters

    def to_pose(self) -> Pose:
        return Pose.from_raw(self.raw_quat.detach().cpu().numpy(),
                             self.translation.detach().cpu().numpy())


@dataclass
class FrameForward:
    frame_index: int
    depth: torch.Tensor          # (H, W)
    label_logits: torch.Tensor   # (n + 1, H, W)
    objects: dict                # id -> ObjectForward


@dataclass
class ClipForward:
    video_id: str
    frames: list                 # list[FrameForward]


class TemporalPoseNet(nn.Module):
    """Pose regression over video clips with recurrent ROI memory."""

    def __init__(self, cfg: EncoderConfig, object_ids: list):
        super().__init__()
        if not object_ids:
            raise InvalidInputError("model needs at least one object class")
        self.cfg = cfg
        self.object_ids = list(object_ids)
        self.class_index = {obj_id: i for i, obj_id in enumerate(self.object_ids)}
        self.encoder = FrameEncoder(cfg, num_classes=len(self.object_ids))
        self.temporal = build_temporal(cfg)
        self.regressor = PoseRegressor(cfg, num_classes=len(self.object_ids))

    @property
    def num_classes(self) -> int:
        return len(self.object_ids)

    def _image_tensor(self, rgb: np.ndarray) -> torch.Tensor:
        dtype = next(self.parameters()).dtype
        return torch.as_tensor(np.ascontiguousarray(rgb.transpose(2, 0, 1)), dtype=dtype)

    def encode_frame(self, rgb: np.ndarray) -> FrameFeatures:
        return self.encoder(self._image_tensor(rgb))

    def _zero_memory(self) -> torch.Tensor:
        k = self.cfg.roi_size
        dtype = next(self.parameters()).dtype
        return torch.zeros(self.cfg.memory_channels, k, k, dtype=dtype)

    def forward_frame(self, rgb: np.ndarray, boxes: dict, states: dict,
                      intrinsics: CameraIntrinsics, extrinsic: np.ndarray,
                      frame_index: int = 0):
        """One frame for all boxed objects; returns (FrameForward, new states)."""
        cfg = self.cfg
        features = self.encode_frame(rgb)
        outputs = {}
        new_states = {}
        for obj_id, box in boxes.items():
            if obj_id not in self.class_index:
                raise InvalidInputError(f"object '{obj_id}' is not among the model's classes")
            box = validate_box(box, features.image_size)
            roi_feat = roi_fuse(features, box, cfg.roi_size, cfg.total_stride,
                                cfg.depth_penult_stride)
            droi = depth_roi(features, box, cfg.roi_size)
            state = states.get(obj_id) if cfg.temporal_variant != "none" else None
            if state is None:
                warped = self._zero_memory()
            elif cfg.conjugation_warp:
                warped = conjugation_warp(state, extrinsic)
            else:
                warped = warp_previous_features(state, extrinsic, box, droi, intrinsics)
            memory, fused = self.temporal(warped, roi_feat)
            delta_c, tz_reg, quat = self.regressor.regress_pose(fused, self.class_index[obj_id])
            tz = droi.median() if cfg.tz_from_depth else tz_reg
            translation = recover_translation_t(box_center(box), delta_c, tz, intrinsics)
            outputs[obj_id] = ObjectForward(
                object_id=obj_id, class_index=self.class_index[obj_id], box=box,
                raw_quat=quat, delta_c=delta_c, tz=tz, translation=translation,
            )
            if cfg.temporal_variant != "none":
                new_states[obj_id] = TemporalState(memory=memory, extrinsic=np.asarray(extrinsic),
                                                   box=box)
        frame_out = FrameForward(
            frame_index=frame_index,
            depth=features.depth,
            label_logits=features.label_logits,
            objects=outputs,
        )
        return frame_out, new_states

    def forward_clip(self, clip, boxes: list | None = None) -> ClipForward:
        """Run the whole clip; `boxes` (per-frame id -> box) defaults to gt boxes."""
        if len(clip) == 0:
            raise InvalidInputError("cannot run an empty clip")
        states: dict = {}
        frames_out = []
        for i, frame in enumerate(clip.frames):
            frame_boxes = boxes[i] if boxes is not None else {
                obj.id: obj.bbox for obj in frame.objects}
            frame_out, states = self.forward_frame(
                frame.rgb, frame_boxes, states, frame.intrinsics, frame.extrinsic,
                frame_index=frame.frame_index)
            frames_out.append(frame_out)
        return ClipForward(video_id=clip.video_id, frames=frames_out)


def build_model(cfg: EncoderConfig, object_ids: list, seed: int = 0) -> TemporalPoseNet:
    """Construct a model with deterministic, seed-controlled initialization."""
    torch.manual_seed(seed)
    return TemporalPoseNet(cfg, object_ids)
