"""Checkpoint archives: weight tensors + architecture config + registry hash."""

from __future__ import annotations

from pathlib import Path

import torch

from ..errors import CheckpointError
from .config import EncoderConfig
from .model import TemporalPoseNet, build_model

FORMAT_VERSION = 1
_REQUIRED_KEYS = ("format_version", "encoder_config", "registry_hash", "object_ids", "model_state")


def save_checkpoint(path, model: TemporalPoseNet, registry_hash: str,
                    extra: dict | None = None) -> None:
    """Write a single-archive checkpoint with a versioned header."""
    payload = {
        "format_version": FORMAT_VERSION,
        "encoder_config": model.cfg.to_dict(),
        "registry_hash": registry_hash,
        "object_ids": list(model.object_ids),
        "model_state": model.state_dict(),
        "extra": dict(extra or {}),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def load_checkpoint(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:  # torch raises a zoo of unpickling errors
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise CheckpointError(f"corrupt checkpoint {path}: not an archive dict")
    missing = [k for k in _REQUIRED_KEYS if k not in payload]
    if missing:
        raise CheckpointError(f"checkpoint {path} is missing keys {missing}")
    if payload["format_version"] != FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint {path} has format version {payload['format_version']}, "
            f"this build reads {FORMAT_VERSION}")
    return payload


def model_from_checkpoint(path, expected_registry_hash: str | None = None) -> TemporalPoseNet:
    """Rebuild the model from an archive, optionally pinning the registry."""
    payload = load_checkpoint(path)
    if expected_registry_hash is not None and payload["registry_hash"] != expected_registry_hash:
        raise CheckpointError(
            f"checkpoint {path} was trained against a different object registry "
            f"({payload['registry_hash'][:12]}... vs {expected_registry_hash[:12]}...)")
    cfg = EncoderConfig.from_dict(payload["encoder_config"])
    model = build_model(cfg, payload["object_ids"])
    model.load_state_dict(payload["model_state"])
    model.eval()
    return model
