"""Dataset records and the portable on-disk layout.

A dataset root holds one directory per video plus a `models/` registry
directory. Each frame is four files named by its zero-padded index:

    NNNNNN.rgb.png    8-bit RGB
    NNNNNN.depth.png  16-bit grayscale, 0.1 mm units, 0 = invalid
    NNNNNN.label.png  8-bit, 0 = background, class_index + 1 otherwise
    NNNNNN.meta.json  poses (wxyz + xyz), bboxes, extrinsic, intrinsics

Videos index their meta files eagerly; images load lazily per frame.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import DataError
from ..geometry import CameraIntrinsics, Pose, validate_extrinsic

DEPTH_UNIT_M = 1e-4  # 0.1 mm per 16-bit step
MODELS_DIR = "models"


@dataclass(frozen=True)
class FrameObject:
    """Ground-truth annotation of one object in one frame."""

    id: str
    pose: Pose
    bbox: np.ndarray  # (x0, y0, x1, y1) pixels

    def __post_init__(self):
        object.__setattr__(self, "bbox", np.asarray(self.bbox, dtype=float).reshape(4))


@dataclass
class FrameRecord:
    """A fully materialized frame: images plus annotations."""

    rgb: np.ndarray          # (H, W, 3) float32 in [0, 1]
    depth: np.ndarray        # (H, W) float32 meters, 0 = invalid
    labels: np.ndarray       # (H, W) uint8 class ids (0 = background)
    objects: list            # list[FrameObject]
    extrinsic: np.ndarray    # 4x4 world-to-camera
    intrinsics: CameraIntrinsics
    frame_index: int

    @property
    def image_size(self):
        return self.rgb.shape[0], self.rgb.shape[1]

    def object_map(self) -> dict:
        return {obj.id: obj for obj in self.objects}


@dataclass
class VideoClip:
    """An ordered, constant-stride excerpt of one video."""

    frames: list
    video_id: str
    stride: int

    def __post_init__(self):
        idx = [f.frame_index for f in self.frames]
        if any(b - a != self.stride for a, b in zip(idx, idx[1:])):
            raise DataError(f"clip indices {idx} are not stride-{self.stride}")

    def __len__(self):
        return len(self.frames)

    def __getitem__(self, i):
        return self.frames[i]


def save_rgb(path, rgb: np.ndarray) -> None:
    arr = np.clip(np.asarray(rgb) * 255.0 + 0.5, 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path)


def load_rgb(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0


def save_depth(path, depth_m: np.ndarray) -> None:
    steps = np.clip(np.round(np.asarray(depth_m) / DEPTH_UNIT_M), 0, 65535).astype(np.uint16)
    Image.fromarray(steps, mode="I;16").save(path)


def load_depth(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im, dtype=np.float32) * DEPTH_UNIT_M


def save_labels(path, labels: np.ndarray) -> None:
    Image.fromarray(np.asarray(labels, dtype=np.uint8), mode="L").save(path)


def load_labels(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im, dtype=np.uint8)


def frame_meta_dict(frame_index: int, intrinsics: CameraIntrinsics, extrinsic: np.ndarray,
                    objects: list) -> dict:
    return {
        "frame": int(frame_index),
        "intrinsics": {"fx": intrinsics.fx, "fy": intrinsics.fy,
                       "px": intrinsics.px, "py": intrinsics.py},
        "extrinsic": [[float(v) for v in row] for row in np.asarray(extrinsic)],
        "objects": [
            {
                "id": obj.id,
                "quat_wxyz": [float(v) for v in obj.pose.quat],
                "translation_xyz": [float(v) for v in obj.pose.translation],
                "bbox": [float(v) for v in obj.bbox],
            }
            for obj in objects
        ],
    }


def dump_meta(meta: dict) -> str:
    return json.dumps(meta, indent=2, sort_keys=True) + "\n"


class Video:
    """Lazy per-frame access over one video directory."""

    def __init__(self, video_id: str, directory: Path):
        self.id = video_id
        self.directory = Path(directory)
        self._metas = []
        meta_paths = sorted(self.directory.glob("*.meta.json"))
        if not meta_paths:
            raise DataError(f"video directory {self.directory} holds no frames")
        intr = None
        for path in meta_paths:
            try:
                meta = json.loads(path.read_text())
            except json.JSONDecodeError as exc:
                raise DataError(f"unreadable frame meta {path}: {exc}") from exc
            this_intr = meta.get("intrinsics")
            if intr is None:
                intr = this_intr
            elif this_intr != intr:
                raise DataError(f"{path}: intrinsics differ from the first frame of video '{video_id}'")
            self._metas.append((path, meta))
        first = self._metas[0][1]["intrinsics"]
        self.intrinsics = CameraIntrinsics(**first)

    def __len__(self):
        return len(self._metas)

    def frame_index(self, i: int) -> int:
        return int(self._metas[i][1]["frame"])

    def load_frame(self, i: int) -> FrameRecord:
        path, meta = self._metas[i]
        stem = path.name[: -len(".meta.json")]
        try:
            rgb = load_rgb(self.directory / f"{stem}.rgb.png")
            depth = load_depth(self.directory / f"{stem}.depth.png")
            labels = load_labels(self.directory / f"{stem}.label.png")
        except (OSError, ValueError) as exc:
            raise DataError(f"unreadable image for frame {path}: {exc}") from exc
        h, w = rgb.shape[0], rgb.shape[1]
        objects = []
        for entry in meta["objects"]:
            for key in ("id", "quat_wxyz", "translation_xyz", "bbox"):
                if key not in entry:
                    raise DataError(f"{path}: object entry missing '{key}': {entry}")
            bbox = np.asarray(entry["bbox"], dtype=float)
            if bbox[2] <= 0 or bbox[3] <= 0 or bbox[0] >= w or bbox[1] >= h:
                raise DataError(f"{path}: bbox {bbox.tolist()} of '{entry['id']}' misses the image")
            objects.append(FrameObject(
                id=entry["id"],
                pose=Pose(np.asarray(entry["quat_wxyz"], dtype=float),
                          np.asarray(entry["translation_xyz"], dtype=float)),
                bbox=bbox,
            ))
        try:
            extrinsic = validate_extrinsic(np.asarray(meta["extrinsic"], dtype=float))
        except ValueError as exc:
            raise DataError(f"{path}: bad extrinsic: {exc}") from exc
        return FrameRecord(
            rgb=rgb, depth=depth, labels=labels, objects=objects,
            extrinsic=extrinsic, intrinsics=self.intrinsics,
            frame_index=int(meta["frame"]),
        )

    def load_clip(self, indices, stride: int) -> VideoClip:
        return VideoClip(frames=[self.load_frame(i) for i in indices],
                         video_id=self.id, stride=stride)


class Dataset:
    """Indexed videos under a dataset root."""

    def __init__(self, root: Path, videos: dict):
        self.root = Path(root)
        self.videos = videos

    @property
    def video_ids(self) -> list:
        return sorted(self.videos)

    def __len__(self):
        return len(self.videos)

    def models_dir(self) -> Path:
        return self.root / MODELS_DIR


def load_dataset(root) -> Dataset:
    """Index every video directory under `root`."""
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root {root} is not a directory")
    videos = {}
    for child in sorted(root.iterdir()):
        if not child.is_dir() or child.name == MODELS_DIR:
            continue
        if any(child.glob("*.meta.json")):
            videos[child.name] = Video(child.name, child)
    if not videos:
        raise DataError(f"dataset root {root} holds no videos")
    return Dataset(root, videos)
