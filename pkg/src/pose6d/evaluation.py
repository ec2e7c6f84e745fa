"""Evaluation engine: prediction interchange, report tables, curves,
benchmarking, keyframe-position study, and overlay rendering."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .data.clips import make_eval_clips
from .data.records import Dataset, Video, VideoClip
from .errors import DataError, InvalidInputError
from .geometry import Pose, project_center
from .metrics import (
    DEFAULT_CURVE_STEPS,
    DEFAULT_MAX_THRESHOLD_M,
    DEFAULT_MAX_THRESHOLD_RAD,
    DatasetScores,
    accuracy_curve,
    add_metric,
    add_s_metric,
    evaluate_dataset,
    pose_error,
)
from .network.model import TemporalPoseNet
from .objects import ObjectRegistry

EVAL_CLIP_LENGTH = 10
KEYFRAME_CLIP_LENGTH = 20
DEFAULT_KEYFRAME_POSITIONS = (2, 5, 10, 15, 19)


@dataclass(frozen=True)
class PredictionRecord:
    video_id: str
    frame_index: int
    object_id: str
    quat_wxyz: np.ndarray
    translation_xyz: np.ndarray

    def pose(self) -> Pose:
        return Pose.from_raw(self.quat_wxyz, self.translation_xyz)


def write_predictions(path, records) -> None:
    lines = []
    for r in records:
        lines.append(json.dumps({
            "video": r.video_id,
            "frame": int(r.frame_index),
            "object": r.object_id,
            "quat_wxyz": [float(v) for v in r.quat_wxyz],
            "translation_xyz": [float(v) for v in r.translation_xyz],
        }, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n")


def read_predictions(path) -> list:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"predictions file not found: {path}")
    records = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            records.append(PredictionRecord(
                video_id=row["video"], frame_index=int(row["frame"]), object_id=row["object"],
                quat_wxyz=np.asarray(row["quat_wxyz"], dtype=float),
                translation_xyz=np.asarray(row["translation_xyz"], dtype=float),
            ))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: bad prediction record: {exc}") from exc
    return records


def load_boxes_file(path, registry: ObjectRegistry) -> dict:
    """External detections: JSONL of {video, frame, object, box} records."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"boxes file not found: {path}")
    boxes: dict = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            obj_id = row["object"]
            if obj_id not in registry:
                raise DataError(f"{path}:{lineno}: unknown object id '{obj_id}'")
            boxes.setdefault(row["video"], {}).setdefault(int(row["frame"]), {})[obj_id] = \
                np.asarray(row["box"], dtype=float)
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: bad box record: {exc}") from exc
    return boxes


def _clip_boxes(clip: VideoClip, box_source, video_boxes: dict | None):
    """Per-frame {id: box} dicts for a clip; None means use gt."""
    if box_source == "gt":
        return None
    out = []
    for frame in clip.frames:
        out.append(dict((video_boxes or {}).get(frame.frame_index, {})))
    return out


def predict_clip(model: TemporalPoseNet, clip: VideoClip, boxes=None) -> list:
    """PredictionRecords for every boxed object in every frame of the clip."""
    with torch.no_grad():
        forward = model.forward_clip(clip, boxes=boxes)
    records = []
    for frame_out in forward.frames:
        for obj_id, obj in frame_out.objects.items():
            pose = obj.to_pose()
            records.append(PredictionRecord(
                video_id=forward.video_id, frame_index=frame_out.frame_index,
                object_id=obj_id, quat_wxyz=pose.quat, translation_xyz=pose.translation,
            ))
    return records


def run_eval(model: TemporalPoseNet, dataset: Dataset, registry: ObjectRegistry,
             box_source: str = "gt", clip_length: int = EVAL_CLIP_LENGTH,
             stride: int = 2, video_ids=None) -> list:
    """Predictions over non-overlapping eval clips of the chosen videos."""
    file_boxes = None
    if box_source != "gt":
        file_boxes = load_boxes_file(box_source, registry)
    records = []
    for vid in (video_ids if video_ids is not None else dataset.video_ids):
        video = dataset.videos[vid]
        for clip in make_eval_clips(video, length=clip_length, stride=stride):
            boxes = _clip_boxes(clip, box_source, (file_boxes or {}).get(vid))
            records.extend(predict_clip(model, clip, boxes=boxes))
    return records


def scoring_triples(records, dataset: Dataset) -> list:
    """(object id, gt Pose, pred Pose) triples by joining predictions with gt."""
    gt_cache: dict = {}
    triples = []
    for r in records:
        key = (r.video_id, r.frame_index)
        if key not in gt_cache:
            video = dataset.videos.get(r.video_id)
            if video is None:
                raise DataError(f"prediction references unknown video '{r.video_id}'")
            index_by_frame = {video.frame_index(i): i for i in range(len(video))}
            if r.frame_index not in index_by_frame:
                raise DataError(f"prediction references missing frame {r.frame_index} "
                                f"of video '{r.video_id}'")
            frame = video.load_frame(index_by_frame[r.frame_index])
            gt_cache[key] = frame.object_map()
        gt_objects = gt_cache[key]
        if r.object_id not in gt_objects:
            raise DataError(f"no gt pose for '{r.object_id}' in {r.video_id}/{r.frame_index}")
        triples.append((r.object_id, gt_objects[r.object_id].pose, r.pose()))
    return triples


# --- report tables ---


@dataclass
class ReportTable:
    scores: DatasetScores
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def row(s):
            return {"object": s.object_id, "count": s.count,
                    "add_auc": 100.0 * s.add_auc, "add_s_auc": 100.0 * s.add_s_auc}
        return {
            "metadata": dict(self.metadata),
            "max_threshold": self.scores.max_threshold,
            "steps": self.scores.steps,
            "rows": [row(s) for s in self.scores.per_object],
            "all": row(self.scores.all_row),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        data = self.to_dict()
        lines = [f"{'object':<20}{'count':>8}{'ADD AUC':>12}{'ADD-S AUC':>12}"]
        for row in data["rows"] + [data["all"]]:
            lines.append(f"{row['object']:<20}{row['count']:>8}"
                         f"{row['add_auc']:>12.2f}{row['add_s_auc']:>12.2f}")
        return "\n".join(lines) + "\n"


def build_report(records, dataset: Dataset, registry: ObjectRegistry,
                 max_threshold: float = DEFAULT_MAX_THRESHOLD_M,
                 steps: int = DEFAULT_CURVE_STEPS,
                 posecnn_symmetric_convention: bool = False,
                 metadata: dict | None = None) -> ReportTable:
    triples = scoring_triples(records, dataset)
    scores = evaluate_dataset(triples, registry, max_threshold=max_threshold, steps=steps,
                              posecnn_symmetric_convention=posecnn_symmetric_convention)
    return ReportTable(scores=scores, metadata=dict(metadata or {}))


# --- accuracy curves ---

CURVE_KINDS = ("add", "add_s", "rotation", "translation")


def curve_errors(records, dataset: Dataset, registry: ObjectRegistry, kind: str) -> dict:
    """Per-object error lists for the requested curve kind."""
    if kind not in CURVE_KINDS:
        raise InvalidInputError(f"unknown curve kind '{kind}', expected one of {CURVE_KINDS}")
    triples = scoring_triples(records, dataset)
    per_object: dict = {}
    for obj_id, gt, pred in triples:
        err = pose_error(registry.get(obj_id), gt, pred)
        value = {"add": err.add, "add_s": err.add_s, "rotation": err.rotation_error,
                 "translation": err.translation_error}[kind]
        per_object.setdefault(obj_id, []).append(value)
    return per_object


def curve_max_threshold(kind: str) -> float:
    return DEFAULT_MAX_THRESHOLD_RAD if kind == "rotation" else DEFAULT_MAX_THRESHOLD_M


def build_curves(records, dataset: Dataset, registry: ObjectRegistry, kind: str,
                 steps: int = DEFAULT_CURVE_STEPS) -> dict:
    per_object = curve_errors(records, dataset, registry, kind)
    max_threshold = curve_max_threshold(kind)
    out = {"kind": kind, "max_threshold": max_threshold, "objects": {}, "pooled": None}
    pooled = []
    for obj_id in registry.ids:
        errs = per_object.get(obj_id)
        if not errs:
            continue
        curve = accuracy_curve(errs, max_threshold, steps)
        out["objects"][obj_id] = {
            "auc": curve.auc,
            "thresholds": [float(v) for v in curve.thresholds],
            "accuracy": [float(v) for v in curve.accuracy],
        }
        pooled.extend(errs)
    if not pooled:
        raise InvalidInputError("no errors to plot")
    curve = accuracy_curve(pooled, max_threshold, steps)
    out["pooled"] = {
        "auc": curve.auc,
        "thresholds": [float(v) for v in curve.thresholds],
        "accuracy": [float(v) for v in curve.accuracy],
    }
    return out


def plot_curves(curves: dict, out_image) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    unit = "rad" if curves["kind"] == "rotation" else "m"
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for obj_id, data in curves["objects"].items():
        ax.plot(data["thresholds"], data["accuracy"], label=f"{obj_id} ({100 * data['auc']:.1f})")
    pooled = curves["pooled"]
    ax.plot(pooled["thresholds"], pooled["accuracy"], "k--",
            label=f"ALL ({100 * pooled['auc']:.1f})")
    ax.set_xlabel(f"error threshold ({unit})")
    ax.set_ylabel("accuracy")
    ax.set_xlim(0, curves["max_threshold"])
    ax.set_ylim(0, 1.02)
    ax.set_title(f"{curves['kind']} accuracy curve, AUC in %")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_image, dpi=120)
    plt.close(fig)


# --- timing benchmark ---


@dataclass(frozen=True)
class BenchResult:
    frames: int
    wall_time: float
    fps: float
    variant: str

    def to_dict(self) -> dict:
        return {"frames": self.frames, "wall_time": self.wall_time,
                "fps": self.fps, "variant": self.variant}


def run_benchmark(model: TemporalPoseNet, dataset: Dataset, num_frames: int,
                  warmup: int = 10) -> BenchResult:
    """Per-frame latency of encode -> regress, warmup excluded, images preloaded."""
    if num_frames < 100:
        raise InvalidInputError(f"benchmark needs at least 100 frames, got {num_frames}")
    frames = []
    for vid in dataset.video_ids:
        video = dataset.videos[vid]
        for i in range(len(video)):
            frames.append(video.load_frame(i))
            if len(frames) >= num_frames:
                break
        if len(frames) >= num_frames:
            break
    if not frames:
        raise DataError("dataset holds no frames to benchmark")
    base = list(frames)
    while len(frames) < num_frames:
        frames.append(base[len(frames) % len(base)])

    states: dict = {}
    timed = 0
    elapsed = 0.0
    with torch.no_grad():
        for i, frame in enumerate(frames):
            boxes = {obj.id: obj.bbox for obj in frame.objects}
            start = time.perf_counter()
            _, states = model.forward_frame(frame.rgb, boxes, states, frame.intrinsics,
                                            frame.extrinsic, frame_index=frame.frame_index)
            step = time.perf_counter() - start
            if i >= warmup:
                elapsed += step
                timed += 1
    if timed == 0 or elapsed <= 0:
        raise InvalidInputError("benchmark produced no timed frames")
    return BenchResult(frames=timed, wall_time=elapsed, fps=timed / elapsed,
                       variant=model.cfg.temporal_variant)


# --- keyframe-position study ---


def keyframe_clips(video: Video, length: int = KEYFRAME_CLIP_LENGTH) -> list:
    """Non-overlapping stride-1 windows of exactly `length` frames."""
    clips = []
    for start in range(0, len(video) - length + 1, length):
        clips.append(video.load_clip(list(range(start, start + length)), stride=1))
    return clips


def run_keyframe_study(model: TemporalPoseNet, dataset: Dataset, registry: ObjectRegistry,
                       positions=DEFAULT_KEYFRAME_POSITIONS,
                       clip_length: int = KEYFRAME_CLIP_LENGTH,
                       max_threshold: float = DEFAULT_MAX_THRESHOLD_M) -> dict:
    """Score only the clip index `p` prediction, for each requested position."""
    positions = [int(p) for p in positions]
    for p in positions:
        if not 0 <= p < clip_length:
            raise InvalidInputError(f"position {p} outside clip length {clip_length}")
    per_position_errors: dict = {p: {"add": [], "add_s": []} for p in positions}
    clip_count = 0
    for vid in dataset.video_ids:
        for clip in keyframe_clips(dataset.videos[vid], length=clip_length):
            clip_count += 1
            with torch.no_grad():
                forward = model.forward_clip(clip)
            for p in positions:
                frame = clip.frames[p]
                gt_map = frame.object_map()
                for obj_id, obj in forward.frames[p].objects.items():
                    model_pts = registry.get(obj_id)
                    pred = obj.to_pose()
                    per_position_errors[p]["add"].append(
                        add_metric(model_pts, gt_map[obj_id].pose, pred))
                    per_position_errors[p]["add_s"].append(
                        add_s_metric(model_pts, gt_map[obj_id].pose, pred))
    if clip_count == 0:
        raise DataError(f"no video supplies a full {clip_length}-frame window")
    rows = []
    for p in positions:
        errs = per_position_errors[p]
        rows.append({
            "position": p,
            "count": len(errs["add"]),
            "add_auc": 100.0 * accuracy_curve(errs["add"], max_threshold).auc,
            "add_s_auc": 100.0 * accuracy_curve(errs["add_s"], max_threshold).auc,
        })
    return {"clip_length": clip_length, "clips": clip_count, "rows": rows,
            "max_threshold": max_threshold}


def single_frame_records(model: TemporalPoseNet, clips) -> list:
    """Evaluate only the first frame of each clip, with fresh (zero) memory."""
    records = []
    for clip in clips:
        first = VideoClip(frames=[clip.frames[0]], video_id=clip.video_id, stride=clip.stride)
        records.extend(predict_clip(model, first))
    return records


# --- overlay rendering ---


def render_overlays(model: TemporalPoseNet, dataset: Dataset, registry: ObjectRegistry,
                    out_dir, num_frames: int, box_source: str = "gt") -> list:
    """Project model points under gt (green) and predicted (red) poses."""
    from PIL import Image

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    remaining = num_frames
    for vid in dataset.video_ids:
        if remaining <= 0:
            break
        video = dataset.videos[vid]
        for clip in make_eval_clips(video):
            if remaining <= 0:
                break
            with torch.no_grad():
                forward = model.forward_clip(clip)
            for frame, frame_out in zip(clip.frames, forward.frames):
                if remaining <= 0:
                    break
                img = np.clip(frame.rgb * 255.0, 0, 255).astype(np.uint8).copy()
                h, w = img.shape[:2]

                def paint(pose, color, model_pts):
                    pts = pose.apply(model_pts)
                    ok = pts[:, 2] > 1e-6
                    xs = frame.intrinsics.fx * pts[ok, 0] / pts[ok, 2] + frame.intrinsics.px
                    ys = frame.intrinsics.fy * pts[ok, 1] / pts[ok, 2] + frame.intrinsics.py
                    xi = np.round(xs - 0.5).astype(int)
                    yi = np.round(ys - 0.5).astype(int)
                    keep = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
                    img[yi[keep], xi[keep]] = color

                for obj_id, obj in frame_out.objects.items():
                    pts = registry.get(obj_id).points
                    gt = frame.object_map()[obj_id].pose
                    paint(gt, (0, 255, 0), pts)
                    paint(obj.to_pose(), (255, 0, 0), pts)
                path = out_dir / f"overlay_{vid}_{frame.frame_index:06d}.png"
                Image.fromarray(img, mode="RGB").save(path)
                written.append(path)
                remaining -= 1
    return written
