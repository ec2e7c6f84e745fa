"""Input validation helpers for public API boundaries."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError


def check_array(x, name: str, shape=None, dtype=float) -> np.ndarray:
    """Coerce to an ndarray, optionally enforcing an exact shape; must be finite."""
    arr = np.asarray(x, dtype=dtype)
    if shape is not None and arr.shape != tuple(shape):
        raise InvalidInputError(f"{name} must have shape {tuple(shape)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must be finite")
    return arr


def check_quaternion(q, name: str = "quaternion") -> np.ndarray:
    arr = check_array(q, name, shape=(4,))
    if np.linalg.norm(arr) < 1e-12:
        raise InvalidInputError(f"{name} must be nonzero")
    return arr


def check_positive(value, name: str) -> float:
    value = float(value)
    if not value > 0:
        raise InvalidInputError(f"{name} must be positive, got {value}")
    return value


def check_image(img, name: str = "image") -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidInputError(f"{name} must be (H, W, 3), got {arr.shape}")
    return arr


def check_fitted(estimator, attribute: str = "model_") -> None:
    if getattr(estimator, attribute, None) is None:
        raise InvalidInputError(
            f"this {type(estimator).__name__} instance is not fitted yet; call fit first")
