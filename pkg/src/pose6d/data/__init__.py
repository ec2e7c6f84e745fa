"""Dataset ingestion, clip construction, augmentation, and synthetic scenes."""

from .augment import AugmentConfig, augment_bbox, augment_frame
from .clips import eval_clip_indices, make_eval_clips, sample_stride, sample_train_clip
from .records import (
    DEPTH_UNIT_M,
    Dataset,
    FrameObject,
    FrameRecord,
    Video,
    VideoClip,
    load_dataset,
)
from .synthetic import (
    GenerationResult,
    SceneSpec,
    default_scene_spec,
    generate_synthetic_dataset,
    load_scene_spec,
    scene_spec_from_dict,
)

__all__ = [
    "AugmentConfig", "augment_bbox", "augment_frame",
    "eval_clip_indices", "make_eval_clips", "sample_stride", "sample_train_clip",
    "DEPTH_UNIT_M", "Dataset", "FrameObject", "FrameRecord", "Video", "VideoClip",
    "load_dataset",
    "GenerationResult", "SceneSpec", "default_scene_spec", "generate_synthetic_dataset",
    "load_scene_spec", "scene_spec_from_dict",
]
