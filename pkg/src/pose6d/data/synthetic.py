"""Deterministic synthetic video generator: flat-shaded rasterization with a
z-buffer, exact poses and boxes, smooth spline camera trajectories.

A scene spec (JSON) names parametric objects, a camera path (spline control
points + look-at), frame count, and video count; every video varies object
placement and camera phase deterministically from the seed.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataError, InvalidInputError
from ..geometry import CameraIntrinsics, Pose, matrix_to_quat, project_center, quat_from_axis_angle, quat_to_matrix
from ..objects import ObjectModel, ObjectRegistry, cube_model, cylinder_model, pyramid_model
from .meshes import TriangleMesh, build_mesh
from .records import FrameObject, dump_meta, frame_meta_dict, save_depth, save_labels, save_rgb

logger = logging.getLogger(__name__)

NEAR_PLANE = 0.05
AMBIENT = 0.35
LIGHT_DIR_WORLD = np.array([0.35, -0.45, 0.82])


# --- scene specification ---


@dataclass(frozen=True)
class SceneObject:
    id: str
    kind: str                      # cube | pyramid | cylinder
    params: dict = field(default_factory=dict)
    color: tuple = (0.8, 0.8, 0.8)
    symmetric: bool = False
    position: tuple = (0.0, 0.0, 0.0)
    surface_samples: int = 0


@dataclass(frozen=True)
class CameraPath:
    control_points: np.ndarray     # (M, 3) world positions
    look_at: tuple = (0.0, 0.0, 0.0)
    up: tuple = (0.0, 0.0, 1.0)
    closed: bool = True

    def __post_init__(self):
        pts = np.asarray(self.control_points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 2:
            raise InvalidInputError("camera path needs at least 2 control points of dim 3")
        object.__setattr__(self, "control_points", pts)


@dataclass(frozen=True)
class SceneSpec:
    name: str
    image_size: tuple              # (H, W)
    intrinsics: CameraIntrinsics
    objects: tuple                 # SceneObject, manifest order = class order
    camera: CameraPath
    frames_per_video: int = 24
    num_videos: int = 1
    placement_jitter: float = 0.0  # +- meters applied to object xy per video
    seed: int = 0

    def __post_init__(self):
        if self.frames_per_video < 1 or self.num_videos < 1:
            raise InvalidInputError("frame and video counts must be positive")
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise InvalidInputError(f"duplicate object ids in scene spec: {ids}")


def scene_spec_from_dict(data: dict) -> SceneSpec:
    try:
        objects = tuple(
            SceneObject(
                id=o["id"], kind=o["kind"], params=dict(o.get("params", {})),
                color=tuple(o.get("color", (0.8, 0.8, 0.8))),
                symmetric=bool(o.get("symmetric", False)),
                position=tuple(o.get("position", (0.0, 0.0, 0.0))),
                surface_samples=int(o.get("surface_samples", 0)),
            )
            for o in data["objects"]
        )
        cam = data["camera"]
        return SceneSpec(
            name=data.get("name", "scene"),
            image_size=tuple(data["image_size"]),
            intrinsics=CameraIntrinsics(**data["intrinsics"]),
            objects=objects,
            camera=CameraPath(
                control_points=np.asarray(cam["control_points"], dtype=float),
                look_at=tuple(cam.get("look_at", (0.0, 0.0, 0.0))),
                up=tuple(cam.get("up", (0.0, 0.0, 1.0))),
                closed=bool(cam.get("closed", True)),
            ),
            frames_per_video=int(data.get("frames_per_video", 24)),
            num_videos=int(data.get("num_videos", 1)),
            placement_jitter=float(data.get("placement_jitter", 0.0)),
            seed=int(data.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"bad scene spec: {exc}") from exc


def load_scene_spec(path) -> SceneSpec:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"scene spec file not found: {path}")
    try:
        return scene_spec_from_dict(json.loads(path.read_text()))
    except json.JSONDecodeError as exc:
        raise DataError(f"unreadable scene spec {path}: {exc}") from exc


def build_object_model(obj: SceneObject, seed: int) -> ObjectModel:
    p = obj.params
    if obj.kind == "cube":
        return cube_model(obj.id, size=p.get("size", 1.0), surface_samples=obj.surface_samples,
                          symmetric=obj.symmetric, seed=seed)
    if obj.kind == "pyramid":
        return pyramid_model(obj.id, base=p.get("base", 1.0), height=p.get("height", 1.0),
                             surface_samples=obj.surface_samples, symmetric=obj.symmetric, seed=seed)
    if obj.kind == "cylinder":
        return cylinder_model(obj.id, radius=p.get("radius", 0.5), height=p.get("height", 1.0),
                              segments=p.get("segments", 24), rings=p.get("rings", 5),
                              symmetric=obj.symmetric)
    raise DataError(f"unknown object kind '{obj.kind}' for '{obj.id}'")


# --- camera path ---


def catmull_rom(control: np.ndarray, s: float, closed: bool = True) -> np.ndarray:
    """Point on the Catmull-Rom spline through `control` at parameter s in [0, 1]."""
    pts = np.asarray(control, dtype=float)
    m = len(pts)
    if closed:
        num_seg = m
        s = s % 1.0
        seg = min(int(s * num_seg), num_seg - 1)
        t = s * num_seg - seg
        p0, p1, p2, p3 = (pts[(seg + k - 1) % m] for k in range(4))
    else:
        num_seg = m - 1
        s = min(max(s, 0.0), 1.0)
        seg = min(int(s * num_seg), num_seg - 1)
        t = s * num_seg - seg
        idx = [max(0, seg - 1), seg, seg + 1, min(m - 1, seg + 2)]
        p0, p1, p2, p3 = (pts[i] for i in idx)
    t2, t3 = t * t, t * t * t
    return 0.5 * ((2 * p1) + (-p0 + p2) * t +
                  (2 * p0 - 5 * p1 + 4 * p2 - p3) * t2 +
                  (-p0 + 3 * p1 - 3 * p2 + p3) * t3)


def look_at_extrinsic(position, target, up=(0.0, 0.0, 1.0)) -> np.ndarray:
    """World-to-camera transform with +z forward, +x right, +y down."""
    pos = np.asarray(position, dtype=float)
    forward = np.asarray(target, dtype=float) - pos
    n = np.linalg.norm(forward)
    if n < 1e-9:
        raise InvalidInputError("camera position coincides with the look-at target")
    f = forward / n
    u = np.asarray(up, dtype=float)
    r = np.cross(f, u)
    rn = np.linalg.norm(r)
    if rn < 1e-9:
        raise InvalidInputError("camera forward direction is parallel to 'up'")
    r = r / rn
    d = np.cross(f, r)
    rot = np.stack([r, d, f])
    m = np.eye(4)
    m[:3, :3] = rot
    m[:3, 3] = -rot @ pos
    return m


# --- rasterizer ---


def rasterize(triangles, intrinsics: CameraIntrinsics, image_size,
              background: float = 0.05):
    """Z-buffered flat-shaded rasterization of camera-frame triangles.

    `triangles` yields (verts (3, 3) camera frame, rgb color (3,), label int).
    Returns (rgb (H, W, 3) float, depth (H, W) float meters 0=empty,
    label (H, W) uint8).
    """
    h, w = image_size
    rgb = np.full((h, w, 3), background, dtype=np.float64)
    zbuf = np.full((h, w), np.inf)
    label = np.zeros((h, w), dtype=np.uint8)
    fx, fy, px, py = intrinsics.fx, intrinsics.fy, intrinsics.px, intrinsics.py

    for verts, color, lab in triangles:
        z = verts[:, 2]
        if np.any(z < NEAR_PLANE):
            continue
        sx = fx * verts[:, 0] / z + px
        sy = fy * verts[:, 1] / z + py
        x_min = max(0, int(np.floor(sx.min() - 0.5)))
        x_max = min(w - 1, int(np.ceil(sx.max() - 0.5)))
        y_min = max(0, int(np.floor(sy.min() - 0.5)))
        y_max = min(h - 1, int(np.ceil(sy.max() - 0.5)))
        if x_min > x_max or y_min > y_max:
            continue
        gx, gy = np.meshgrid(np.arange(x_min, x_max + 1) + 0.5,
                             np.arange(y_min, y_max + 1) + 0.5)
        e0 = (sx[1] - sx[0]) * (gy - sy[0]) - (sy[1] - sy[0]) * (gx - sx[0])
        e1 = (sx[2] - sx[1]) * (gy - sy[1]) - (sy[2] - sy[1]) * (gx - sx[1])
        e2 = (sx[0] - sx[2]) * (gy - sy[2]) - (sy[0] - sy[2]) * (gx - sx[2])
        area = (sx[1] - sx[0]) * (sy[2] - sy[0]) - (sy[1] - sy[0]) * (sx[2] - sx[0])
        if abs(area) < 1e-12:
            continue
        if area > 0:
            inside = (e0 >= 0) & (e1 >= 0) & (e2 >= 0)
        else:
            inside = (e0 <= 0) & (e1 <= 0) & (e2 <= 0)
        if not inside.any():
            continue
        l0, l1, l2 = e1 / area, e2 / area, e0 / area
        inv_z = l0 / z[0] + l1 / z[1] + l2 / z[2]
        depth = np.where(inv_z > 0, 1.0 / np.maximum(inv_z, 1e-12), np.inf)
        region = zbuf[y_min:y_max + 1, x_min:x_max + 1]
        closer = inside & (depth < region)
        if not closer.any():
            continue
        zbuf[y_min:y_max + 1, x_min:x_max + 1] = np.where(closer, depth, region)
        rgb_region = rgb[y_min:y_max + 1, x_min:x_max + 1]
        rgb[y_min:y_max + 1, x_min:x_max + 1] = np.where(closer[..., None], color, rgb_region)
        lab_region = label[y_min:y_max + 1, x_min:x_max + 1]
        label[y_min:y_max + 1, x_min:x_max + 1] = np.where(closer, np.uint8(lab), lab_region)

    depth_out = np.where(np.isfinite(zbuf), zbuf, 0.0)
    return rgb, depth_out, label


def shade_color(base_color, normal_world) -> np.ndarray:
    l = LIGHT_DIR_WORLD / np.linalg.norm(LIGHT_DIR_WORLD)
    intensity = AMBIENT + (1 - AMBIENT) * max(0.0, float(np.dot(normal_world, l)))
    return np.clip(np.asarray(base_color, dtype=float) * intensity, 0.0, 1.0)


def object_triangles(mesh: TriangleMesh, rot_world: np.ndarray, pos_world: np.ndarray,
                     extrinsic: np.ndarray, base_color, label_value: int):
    """Camera-frame shaded triangles of one posed object."""
    verts_world = mesh.vertices @ rot_world.T + pos_world
    verts_cam = verts_world @ extrinsic[:3, :3].T + extrinsic[:3, 3]
    tris = []
    for face in mesh.faces:
        vw = verts_world[face]
        n = np.cross(vw[1] - vw[0], vw[2] - vw[0])
        norm = np.linalg.norm(n)
        if norm < 1e-12:
            continue
        color = shade_color(base_color, n / norm)
        tris.append((verts_cam[face], color, label_value))
    return tris


# --- dataset generation ---


@dataclass
class GenerationResult:
    root: Path
    num_videos: int
    frames_per_video: int
    warnings: list


def generate_synthetic_dataset(spec: SceneSpec, out_root, seed: int | None = None) -> GenerationResult:
    """Render the scene spec to the portable dataset layout under `out_root`."""
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    seed = spec.seed if seed is None else int(seed)
    h, w = spec.image_size
    intr = spec.intrinsics

    models = [build_object_model(o, seed) for o in spec.objects]
    registry = ObjectRegistry(models)
    registry.save(out_root / "models")
    meshes = [build_mesh(o.kind, o.params) for o in spec.objects]

    warnings: list = []
    for vid in range(spec.num_videos):
        rng = np.random.default_rng([seed, vid])
        video_dir = out_root / f"video_{vid:03d}"
        video_dir.mkdir(exist_ok=True)

        # deterministic per-video variation: object yaw + xy jitter, camera phase
        placements = []
        for obj in spec.objects:
            yaw = float(rng.uniform(0.0, 2 * np.pi))
            rot = quat_to_matrix(quat_from_axis_angle((0.0, 0.0, 1.0), yaw))
            jitter = rng.uniform(-spec.placement_jitter, spec.placement_jitter, size=2)
            pos = np.asarray(obj.position, dtype=float) + np.array([jitter[0], jitter[1], 0.0])
            placements.append((rot, pos))
        phase = float(rng.uniform(0.0, 2 * np.pi))
        radius_scale = float(rng.uniform(0.9, 1.1))
        cphase = np.array([[np.cos(phase), -np.sin(phase), 0.0],
                           [np.sin(phase), np.cos(phase), 0.0],
                           [0.0, 0.0, 1.0]])
        look = np.asarray(spec.camera.look_at, dtype=float)
        control = (spec.camera.control_points - look) @ cphase.T
        control[:, :2] *= radius_scale
        control = control + look

        for t in range(spec.frames_per_video):
            denom = spec.frames_per_video if spec.camera.closed else max(1, spec.frames_per_video - 1)
            s = t / denom
            cam_pos = catmull_rom(control, s, closed=spec.camera.closed)
            extrinsic = look_at_extrinsic(cam_pos, look, spec.camera.up)

            tris = []
            for cls, (obj, mesh) in enumerate(zip(spec.objects, meshes)):
                rot, pos = placements[cls]
                tris.extend(object_triangles(mesh, rot, pos, extrinsic, obj.color, cls + 1))
            rgb, depth, label = rasterize(tris, intr, (h, w))

            frame_objects = []
            for cls, (obj, model) in enumerate(zip(spec.objects, models)):
                rot, pos = placements[cls]
                rot_cam = extrinsic[:3, :3] @ rot
                t_cam = extrinsic[:3, :3] @ pos + extrinsic[:3, 3]
                if t_cam[2] <= NEAR_PLANE:
                    warnings.append(f"video {vid} frame {t}: '{obj.id}' behind camera, marked absent")
                    continue
                visible = int(np.count_nonzero(label == cls + 1))
                if visible == 0:
                    warnings.append(f"video {vid} frame {t}: '{obj.id}' fully occluded, marked absent")
                    continue
                pts_cam = model.points @ rot_cam.T + t_cam
                xs = intr.fx * pts_cam[:, 0] / pts_cam[:, 2] + intr.px
                ys = intr.fy * pts_cam[:, 1] / pts_cam[:, 2] + intr.py
                bbox = np.array([max(0.0, xs.min()), max(0.0, ys.min()),
                                 min(float(w), xs.max()), min(float(h), ys.max())])
                if bbox[2] - bbox[0] < 1.0 or bbox[3] - bbox[1] < 1.0:
                    warnings.append(f"video {vid} frame {t}: '{obj.id}' outside the image, marked absent")
                    continue
                frame_objects.append(FrameObject(
                    id=obj.id,
                    pose=Pose(matrix_to_quat(rot_cam), t_cam),
                    bbox=bbox,
                ))

            stem = f"{t:06d}"
            save_rgb(video_dir / f"{stem}.rgb.png", rgb)
            save_depth(video_dir / f"{stem}.depth.png", depth)
            save_labels(video_dir / f"{stem}.label.png", label)
            meta = frame_meta_dict(t, intr, extrinsic, frame_objects)
            (video_dir / f"{stem}.meta.json").write_text(dump_meta(meta))

    for msg in warnings:
        logger.warning(msg)
    return GenerationResult(root=out_root, num_videos=spec.num_videos,
                            frames_per_video=spec.frames_per_video, warnings=warnings)


def default_scene_spec(num_videos: int = 20, frames_per_video: int = 24,
                       image_size: int = 64, seed: int = 0,
                       placement_jitter: float = 0.015) -> dict:
    """A 3-object desk scene with an orbiting camera and moderate occlusion."""
    f = image_size * 1.1
    c = image_size / 2.0
    radius, height = 0.42, 0.18
    angles = np.linspace(0.0, 2 * np.pi, 8, endpoint=False)
    control = [[radius * np.cos(a), radius * np.sin(a), height + 0.05 * np.sin(2 * a)]
               for a in angles]
    return {
        "name": "desk3",
        "image_size": [image_size, image_size],
        "intrinsics": {"fx": f, "fy": f, "px": c, "py": c},
        "frames_per_video": frames_per_video,
        "num_videos": num_videos,
        "placement_jitter": placement_jitter,
        "seed": seed,
        "objects": [
            {"id": "redcube", "kind": "cube", "params": {"size": 0.09},
             "color": [0.85, 0.25, 0.2], "position": [-0.055, 0.0, 0.045],
             "surface_samples": 64},
            {"id": "greenpyramid", "kind": "pyramid", "params": {"base": 0.09, "height": 0.11},
             "color": [0.25, 0.8, 0.3], "position": [0.06, 0.01, 0.05],
             "surface_samples": 64},
            {"id": "bluecylinder", "kind": "cylinder",
             "params": {"radius": 0.032, "height": 0.11, "segments": 24},
             "color": [0.25, 0.4, 0.9], "position": [0.0, -0.065, 0.055],
             "symmetric": True},
        ],
        "camera": {
            "control_points": [[float(v) for v in p] for p in control],
            "look_at": [0.0, 0.0, 0.05],
            "up": [0.0, 0.0, 1.0],
            "closed": True,
        },
    }
