"""Training loop: stepped learning-rate schedule, Adam with weight decay,
frozen-backbone handling, per-epoch metrics log, and checkpoint/resume."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import torch

from .data.augment import AugmentConfig, augment_bbox, augment_frame
from .data.clips import make_eval_clips, sample_train_clip
from .data.records import Dataset, VideoClip
from .errors import CheckpointError, InvalidInputError, NumericalError
from .evaluation import predict_clip, scoring_triples
from .losses import (
    DEFAULT_WEIGHTS,
    LossBreakdown,
    depth_loss,
    label_loss,
    pose_loss,
    quat_inner_prod_loss,
    quat_reg_loss,
    total_loss,
)
from .metrics import evaluate_dataset
from .network.checkpoint import load_checkpoint, save_checkpoint
from .network.config import EncoderConfig
from .network.model import TemporalPoseNet, build_model
from .objects import ObjectRegistry, subsample_points

DEFAULT_POINTS_PER_MODEL = 500


@dataclass(frozen=True)
class TrainConfig:
    base_lr: float = 5e-4
    weight_decay: float = 1e-5
    lr_decay: float = 0.8
    lr_decay_every: int = 5
    lr_floor: float = 1e-6
    epochs: int = 100
    batch_size: int = 4
    seed: int = 0
    loss_weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    temporal_variant: str = "baseline_rnn"
    clip_grad_norm: float = 10.0
    val_fraction: float = 0.2
    points_per_model: int = DEFAULT_POINTS_PER_MODEL
    double_cover_abs: bool = False
    serial: bool = False
    augment: AugmentConfig = field(default_factory=AugmentConfig)

    def __post_init__(self):
        if not 0 < self.lr_floor <= self.base_lr:
            raise InvalidInputError("need 0 < lr_floor <= base_lr")
        if not 0 < self.lr_decay < 1:
            raise InvalidInputError("lr_decay must lie in (0, 1)")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["augment"] = asdict(self.augment)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        data = dict(data)
        if "augment" in data and isinstance(data["augment"], dict):
            data["augment"] = AugmentConfig(**data["augment"])
        return cls(**data)


def lr_at_epoch(cfg: TrainConfig, epoch: int) -> float:
    """Stepped decay: base * decay^(epoch // every), floored at lr_floor."""
    return max(cfg.base_lr * cfg.lr_decay ** (epoch // cfg.lr_decay_every), cfg.lr_floor)


def split_videos(dataset: Dataset, val_fraction: float):
    """Hold out the last `val_fraction` of videos (by sorted id) for validation."""
    ids = dataset.video_ids
    n_val = int(round(len(ids) * val_fraction))
    if len(ids) > 1:
        n_val = max(1, min(n_val, len(ids) - 1)) if val_fraction > 0 else 0
    else:
        n_val = 0
    if n_val == 0:
        return ids, []
    return ids[:-n_val], ids[-n_val:]


def clip_loss(model: TemporalPoseNet, clip: VideoClip, registry: ObjectRegistry,
              points_cache: dict, weights: dict, rng=None,
              augment_cfg: AugmentConfig | None = None,
              double_cover_abs: bool = False) -> LossBreakdown:
    """Average the five loss terms over a clip's frames and objects.

    With an rng, frames get color/noise augmentation and boxes get dilated.
    """
    dtype = next(model.parameters()).dtype
    frames = clip.frames
    boxes = None
    if rng is not None and augment_cfg is not None and augment_cfg.enabled:
        frames = [augment_frame(f, rng, augment_cfg) for f in clip.frames]
        boxes = [
            {obj.id: augment_bbox(obj.bbox, rng, f.image_size, augment_cfg.bbox_extend)
             for obj in f.objects}
            for f in frames
        ]
        clip = VideoClip(frames=frames, video_id=clip.video_id, stride=clip.stride)
    forward = model.forward_clip(clip, boxes=boxes)

    depth_terms, label_terms = [], []
    pose_terms, reg_terms, inner_terms = [], [], []
    for frame, frame_out in zip(frames, forward.frames):
        gt_depth = torch.as_tensor(frame.depth, dtype=dtype)
        mask = gt_depth > 0
        if bool(mask.any()):
            depth_terms.append(depth_loss(frame_out.depth, gt_depth, mask))
        label_terms.append(label_loss(frame_out.label_logits.permute(1, 2, 0),
                                      torch.as_tensor(frame.labels, dtype=torch.long)))
        gt_map = frame.object_map()
        for obj_id, obj in frame_out.objects.items():
            gt_obj = gt_map[obj_id]
            model_pts = points_cache[obj_id].to(dtype)
            q_gt = torch.as_tensor(gt_obj.pose.quat, dtype=dtype)
            t_gt = torch.as_tensor(gt_obj.pose.translation, dtype=dtype)
            pose_terms.append(pose_loss(model_pts, obj.raw_quat, obj.translation,
                                        q_gt, t_gt, symmetric=registry.get(obj_id).symmetric))
            reg_terms.append(quat_reg_loss(obj.raw_quat))
            inner_terms.append(quat_inner_prod_loss(obj.raw_quat, q_gt,
                                                    double_cover_abs=double_cover_abs))

    def mean_or_zero(terms):
        if not terms:
            return torch.zeros((), dtype=dtype)
        return torch.stack(terms).mean()

    return total_loss(
        depth=mean_or_zero(depth_terms), label=mean_or_zero(label_terms),
        pose=mean_or_zero(pose_terms), reg=mean_or_zero(reg_terms),
        inner_prod=mean_or_zero(inner_terms), weights=weights,
    )


def build_points_cache(registry: ObjectRegistry, count: int, seed: int) -> dict:
    return {
        obj_id: torch.as_tensor(subsample_points(registry.get(obj_id), count, seed).points)
        for obj_id in registry.ids
    }


def validation_scores(model: TemporalPoseNet, dataset: Dataset, registry: ObjectRegistry,
                      video_ids) -> tuple:
    """Pooled (ADD AUC, ADD-S AUC) over eval clips of the given videos."""
    records = []
    model.eval()
    for vid in video_ids:
        for clip in make_eval_clips(dataset.videos[vid]):
            records.extend(predict_clip(model, clip))
    model.train()
    if not records:
        return None, None
    triples = scoring_triples(records, dataset)
    scores = evaluate_dataset(triples, registry)
    return scores.all_row.add_auc, scores.all_row.add_s_auc


@dataclass
class TrainResult:
    checkpoint_dir: Path
    log_path: Path
    last_checkpoint: Path
    best_checkpoint: Path
    history: list


def _log_epoch(log_path: Path, record: dict) -> None:
    with open(log_path, "a") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def _run_epochs(model: TemporalPoseNet, optimizer, cfg: TrainConfig, dataset: Dataset,
                registry: ObjectRegistry, out_dir: Path, start_epoch: int,
                history: list, best_adds: float) -> TrainResult:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "train_log.jsonl"
    best_path = out_dir / "best.pt"
    last_path = out_dir / "last.pt"
    train_ids, val_ids = split_videos(dataset, cfg.val_fraction)
    points_cache = build_points_cache(registry, cfg.points_per_model, cfg.seed)
    registry_hash = registry.content_hash()
    trainable = [p for p in model.parameters() if p.requires_grad]

    for epoch in range(start_epoch, cfg.epochs):
        lr = lr_at_epoch(cfg, epoch)
        for group in optimizer.param_groups:
            group["lr"] = lr
        rng = np.random.default_rng([max(cfg.seed, 0), epoch])
        order = list(rng.permutation(train_ids))
        clips = [sample_train_clip(dataset.videos[vid], rng) for vid in order]

        model.train()
        sums: dict = {}
        batch_count = 0
        for b in range(0, len(clips), cfg.batch_size):
            batch = clips[b:b + cfg.batch_size]
            breakdowns = [
                clip_loss(model, c, registry, points_cache, cfg.loss_weights, rng=rng,
                          augment_cfg=cfg.augment, double_cover_abs=cfg.double_cover_abs)
                for c in batch
            ]
            loss = torch.stack([bd.total for bd in breakdowns]).mean()
            if not torch.isfinite(loss):
                raise NumericalError(
                    f"non-finite loss at epoch {epoch}, batch {b // cfg.batch_size}, "
                    f"videos {[c.video_id for c in batch]}")
            optimizer.zero_grad()
            loss.backward()
            if cfg.clip_grad_norm > 0:
                torch.nn.utils.clip_grad_norm_(trainable, cfg.clip_grad_norm)
            optimizer.step()
            batch_count += 1
            for bd in breakdowns:
                for name, value in bd.as_floats().items():
                    sums[name] = sums.get(name, 0.0) + value / len(breakdowns)

        mean_losses = {name: value / max(batch_count, 1) for name, value in sums.items()}
        val_add, val_adds = validation_scores(model, dataset, registry, val_ids)
        record = {"epoch": epoch, "lr": lr, "loss": mean_losses,
                  "val_add_auc": val_add, "val_add_s_auc": val_adds}
        history.append(record)
        _log_epoch(log_path, record)

        extra = {
            "epoch": epoch,
            "optimizer_state": optimizer.state_dict(),
            "train_config": cfg.to_dict(),
            "best_adds": best_adds,
        }
        save_checkpoint(out_dir / f"epoch_{epoch:03d}.pt", model, registry_hash, extra)
        save_checkpoint(last_path, model, registry_hash, extra)
        if val_adds is not None and val_adds > best_adds:
            best_adds = val_adds
            save_checkpoint(best_path, model, registry_hash, extra)

    if not best_path.exists():
        save_checkpoint(best_path, model, registry_hash, {"epoch": cfg.epochs - 1,
                                                          "train_config": cfg.to_dict()})
    return TrainResult(checkpoint_dir=out_dir, log_path=log_path,
                       last_checkpoint=last_path, best_checkpoint=best_path, history=history)


def _make_optimizer(model: TemporalPoseNet, cfg: TrainConfig):
    trainable = [p for p in model.parameters() if p.requires_grad]
    return torch.optim.Adam(trainable, lr=cfg.base_lr, weight_decay=cfg.weight_decay)


def train(cfg: TrainConfig, dataset: Dataset, registry: ObjectRegistry, out_dir,
          encoder_cfg: EncoderConfig | None = None) -> TrainResult:
    """Train from scratch; the temporal variant in `cfg` wins over `encoder_cfg`."""
    if len(dataset) == 0:
        raise InvalidInputError("dataset is empty")
    if cfg.serial:
        torch.set_num_threads(1)
    encoder_cfg = encoder_cfg or EncoderConfig()
    encoder_cfg = replace(encoder_cfg, temporal_variant=cfg.temporal_variant)
    model = build_model(encoder_cfg, registry.ids, seed=cfg.seed)
    optimizer = _make_optimizer(model, cfg)
    return _run_epochs(model, optimizer, cfg, dataset, registry, Path(out_dir),
                       start_epoch=0, history=[], best_adds=float("-inf"))


def resume(checkpoint_path, dataset: Dataset, registry: ObjectRegistry, out_dir,
           cfg: TrainConfig | None = None) -> TrainResult:
    """Continue training from a checkpoint; registry hash and n must match."""
    payload = load_checkpoint(checkpoint_path)
    if payload["registry_hash"] != registry.content_hash():
        raise CheckpointError(
            "refusing to resume: checkpoint was trained against a different object registry")
    extra = payload.get("extra", {})
    if cfg is None:
        if "train_config" not in extra:
            raise CheckpointError(f"checkpoint {checkpoint_path} carries no training config")
        cfg = TrainConfig.from_dict(extra["train_config"])
    if cfg.serial:
        torch.set_num_threads(1)
    encoder_cfg = EncoderConfig.from_dict(payload["encoder_config"])
    model = build_model(encoder_cfg, payload["object_ids"], seed=cfg.seed)
    model.load_state_dict(payload["model_state"])
    optimizer = _make_optimizer(model, cfg)
    if "optimizer_state" in extra:
        optimizer.load_state_dict(extra["optimizer_state"])
    start_epoch = int(extra.get("epoch", -1)) + 1
    best_adds = float(extra.get("best_adds", float("-inf")))
    return _run_epochs(model, optimizer, cfg, dataset, registry, Path(out_dir),
                       start_epoch=start_epoch, history=[], best_adds=best_adds)
