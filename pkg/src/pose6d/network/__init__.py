"""Pose network: encoder, ROI fusion, temporal block, regression heads."""

from .config import EncoderConfig, TEMPORAL_VARIANTS, toy_config
from .encoder import FrameEncoder, FrameFeatures
from .heads import PoseRegressor
from .model import (
    ClipForward,
    FrameForward,
    ObjectForward,
    TemporalPoseNet,
    build_model,
    recover_translation_t,
)
from .roi import box_center, depth_roi, roi_fuse, roi_grid, sample_map, validate_box
from .temporal import ConvGRUTemporal, TemporalEncoder, build_temporal
from .warp import TemporalState, conjugation_warp, warp_previous_features
from .checkpoint import load_checkpoint, model_from_checkpoint, save_checkpoint

__all__ = [
    "EncoderConfig", "TEMPORAL_VARIANTS", "toy_config",
    "FrameEncoder", "FrameFeatures", "PoseRegressor",
    "ClipForward", "FrameForward", "ObjectForward", "TemporalPoseNet",
    "build_model", "recover_translation_t",
    "box_center", "depth_roi", "roi_fuse", "roi_grid", "sample_map", "validate_box",
    "ConvGRUTemporal", "TemporalEncoder", "build_temporal",
    "TemporalState", "conjugation_warp", "warp_previous_features",
    "load_checkpoint", "model_from_checkpoint", "save_checkpoint",
]
