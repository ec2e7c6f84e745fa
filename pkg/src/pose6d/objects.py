"""Object model registry: 3D point sets, symmetry flags, and sampling.

On disk a registry is a directory holding one point file per object
(plain text, one "x y z" triple per line, meters) plus `manifest.json`
listing the objects in class-index order:

    {"objects": [{"id": "cube0", "file": "cube0.xyz", "symmetric": false}, ...]}
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, InvalidInputError

MANIFEST_NAME = "manifest.json"


def _pairwise_diameter(points: np.ndarray) -> float:
    diffs = points[:, None, :] - points[None, :, :]
    return float(np.sqrt(np.max(np.sum(diffs * diffs, axis=-1))))


@dataclass(frozen=True)
class ObjectModel:
    """A named 3D point set in the model frame, with symmetry metadata."""

    id: str
    points: np.ndarray
    symmetric: bool = False
    diameter: float = field(default=None)  # recomputed when omitted

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
            raise InvalidInputError(f"object '{self.id}' needs a non-empty (m, 3) point set")
        object.__setattr__(self, "points", pts)
        true_diam = _pairwise_diameter(pts)
        if self.diameter is None:
            object.__setattr__(self, "diameter", true_diam)
        elif abs(self.diameter - true_diam) > 1e-6:
            raise InvalidInputError(
                f"object '{self.id}' diameter {self.diameter} disagrees with point set ({true_diam})"
            )

    @property
    def num_points(self) -> int:
        return self.points.shape[0]


class ObjectRegistry:
    """Immutable id -> ObjectModel mapping with contiguous class indices."""

    def __init__(self, models: list[ObjectModel]):
        if not models:
            raise InvalidInputError("registry needs at least one object")
        ids = [m.id for m in models]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise DataError(f"duplicate object ids in registry: {dup}")
        self._models = {m.id: m for m in models}
        self._index = {m.id: i for i, m in enumerate(models)}
        self._order = list(ids)

    def __len__(self) -> int:
        return len(self._order)

    def __contains__(self, obj_id: str) -> bool:
        return obj_id in self._models

    def __iter__(self):
        return iter(self._order)

    @property
    def ids(self) -> list[str]:
        return list(self._order)

    def get(self, obj_id: str) -> ObjectModel:
        if obj_id not in self._models:
            raise DataError(f"unknown object id '{obj_id}'")
        return self._models[obj_id]

    def class_index(self, obj_id: str) -> int:
        if obj_id not in self._index:
            raise DataError(f"unknown object id '{obj_id}'")
        return self._index[obj_id]

    def content_hash(self) -> str:
        """Stable digest of ids, ordering, symmetry flags, and point sets."""
        h = hashlib.sha256()
        for obj_id in self._order:
            m = self._models[obj_id]
            h.update(obj_id.encode())
            h.update(b"1" if m.symmetric else b"0")
            h.update(np.ascontiguousarray(m.points, dtype="<f8").tobytes())
        return h.hexdigest()

    def save(self, path) -> None:
        """Write manifest + point files under `path` (created if absent)."""
        root = Path(path)
        root.mkdir(parents=True, exist_ok=True)
        entries = []
        for obj_id in self._order:
            m = self._models[obj_id]
            fname = f"{obj_id}.xyz"
            save_points(root / fname, m.points)
            entries.append({"id": obj_id, "file": fname, "symmetric": m.symmetric})
        manifest = {"objects": entries}
        (root / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def save_points(path, points: np.ndarray) -> None:
    lines = [" ".join(repr(float(v)) for v in p) for p in np.asarray(points, dtype=float)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_points(path) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise DataError(f"{path}:{lineno}: expected 'x y z', got {line!r}")
        rows.append([float(v) for v in parts])
    if not rows:
        raise DataError(f"{path}: empty point set")
    return np.array(rows)


def load_registry(path) -> ObjectRegistry:
    """Load a registry directory; class order follows the manifest."""
    root = Path(path)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise DataError(f"missing manifest: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"unreadable manifest {manifest_path}: {exc}") from exc
    entries = manifest.get("objects")
    if not entries:
        raise DataError(f"{manifest_path}: manifest lists no objects")
    models = []
    seen = set()
    for entry in entries:
        obj_id = entry.get("id")
        if not obj_id:
            raise DataError(f"{manifest_path}: manifest entry without id: {entry}")
        if obj_id in seen:
            raise DataError(f"{manifest_path}: duplicate object id '{obj_id}'")
        seen.add(obj_id)
        pts = load_points(root / entry["file"])
        models.append(ObjectModel(id=obj_id, points=pts, symmetric=bool(entry.get("symmetric", False))))
    return ObjectRegistry(models)


def subsample_points(model: ObjectModel, count: int, seed: int) -> ObjectModel:
    """Deterministic without-replacement subsample of a model's point set.

    Returns the model unchanged when count >= m; diameter is recomputed.
    """
    if count < 1:
        raise InvalidInputError(f"count must be >= 1, got {count}")
    if count >= model.num_points:
        return model
    rng = np.random.default_rng(seed)
    idx = rng.choice(model.num_points, size=count, replace=False)
    idx.sort()
    return ObjectModel(id=model.id, points=model.points[idx], symmetric=model.symmetric)


# --- built-in parametric models (closed-form oracle geometry for tests) ---


def cube_model(obj_id: str = "cube", size: float = 1.0, surface_samples: int = 0,
               symmetric: bool = False, seed: int = 0) -> ObjectModel:
    """Axis-aligned cube centered at the origin: 8 corners + optional face samples."""
    h = size / 2.0
    corners = np.array([[sx, sy, sz] for sx in (-h, h) for sy in (-h, h) for sz in (-h, h)])
    pts = corners
    if surface_samples > 0:
        rng = np.random.default_rng(seed)
        face_axis = rng.integers(0, 3, size=surface_samples)
        face_sign = rng.choice([-h, h], size=surface_samples)
        uv = rng.uniform(-h, h, size=(surface_samples, 2))
        extra = np.empty((surface_samples, 3))
        for i in range(surface_samples):
            others = [a for a in range(3) if a != face_axis[i]]
            extra[i, face_axis[i]] = face_sign[i]
            extra[i, others[0]] = uv[i, 0]
            extra[i, others[1]] = uv[i, 1]
        pts = np.vstack([corners, extra])
    return ObjectModel(id=obj_id, points=pts, symmetric=symmetric)


def pyramid_model(obj_id: str = "pyramid", base: float = 1.0, height: float = 1.0,
                  surface_samples: int = 0, symmetric: bool = False, seed: int = 0) -> ObjectModel:
    """Square pyramid: 4 base corners + apex, origin at the centroid of the base."""
    h = base / 2.0
    verts = np.array([
        [-h, -h, 0.0], [h, -h, 0.0], [h, h, 0.0], [-h, h, 0.0], [0.0, 0.0, height],
    ])
    # shift so the model origin sits at the solid's centroid (apex at 3/4 height above it)
    verts[:, 2] -= height / 4.0
    pts = verts
    if surface_samples > 0:
        rng = np.random.default_rng(seed)
        tris = np.array([[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4], [0, 2, 1], [0, 3, 2]])
        choice = rng.integers(0, len(tris), size=surface_samples)
        r1 = np.sqrt(rng.uniform(size=surface_samples))
        r2 = rng.uniform(size=surface_samples)
        a, b, c = (verts[tris[choice, k]] for k in range(3))
        extra = (1 - r1)[:, None] * a + (r1 * (1 - r2))[:, None] * b + (r1 * r2)[:, None] * c
        pts = np.vstack([verts, extra])
    return ObjectModel(id=obj_id, points=pts, symmetric=symmetric)


def cylinder_model(obj_id: str = "cylinder", radius: float = 0.5, height: float = 1.0,
                   segments: int = 24, rings: int = 5, symmetric: bool = True) -> ObjectModel:
    """Cylinder shell samples: `rings` circles of `segments` points, axis +z."""
    if segments < 3 or rings < 2:
        raise InvalidInputError("cylinder needs segments >= 3 and rings >= 2")
    theta = np.linspace(0.0, 2 * np.pi, segments, endpoint=False)
    zs = np.linspace(-height / 2.0, height / 2.0, rings)
    pts = [np.stack([radius * np.cos(theta), radius * np.sin(theta), np.full_like(theta, z)], axis=1)
           for z in zs]
    pts.append(np.array([[0.0, 0.0, -height / 2.0], [0.0, 0.0, height / 2.0]]))
    return ObjectModel(id=obj_id, points=np.vstack(pts), symmetric=symmetric)
