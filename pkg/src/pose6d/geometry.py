"""Pinhole projection, quaternion algebra, and rigid-transform helpers.

Quaternions are stored scalar-first as (w, x, y, z). Angles are radians,
lengths are meters. Every function here is pure and safe to call from
concurrent threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BehindCameraError, InvalidInputError

_UNIT_TOL = 1e-6


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters: focal lengths and principal point, in pixels."""

    fx: float
    fy: float
    px: float
    py: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise InvalidInputError(f"focal lengths must be positive, got fx={self.fx} fy={self.fy}")

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.px], [0.0, self.fy, self.py], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class Pose:
    """Rigid transform from object model frame to camera frame.

    `quat` is a unit quaternion (w, x, y, z); `translation` is meters.
    """

    quat: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.quat, dtype=float).reshape(4)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if not np.all(np.isfinite(q)) or not np.all(np.isfinite(t)):
            raise InvalidInputError("pose components must be finite")
        if abs(np.linalg.norm(q) - 1.0) > _UNIT_TOL:
            raise InvalidInputError(f"pose quaternion must be unit norm, got |q|={np.linalg.norm(q)}")
        object.__setattr__(self, "quat", q)
        object.__setattr__(self, "translation", t)

    @classmethod
    def from_raw(cls, quat, translation) -> "Pose":
        """Build a pose from a possibly non-unit quaternion (normalized here)."""
        return cls(quat_normalize(quat), np.asarray(translation, dtype=float))

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.quat)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform (N, 3) model points into the camera frame."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation_matrix().T + self.translation

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation_matrix()
        m[:3, 3] = self.translation
        return m


def quat_normalize(q) -> np.ndarray:
    """Return q scaled to unit norm; raises on (near-)zero input."""
    q = np.asarray(q, dtype=float).reshape(4)
    n = np.linalg.norm(q)
    if not np.isfinite(n) or n < 1e-12:
        raise InvalidInputError("cannot normalize a zero-norm quaternion")
    return q / n


def quat_to_matrix(q) -> np.ndarray:
    """Convert quaternion (w, x, y, z) to a 3x3 rotation matrix.

    The input is normalized first, so any nonzero quaternion is accepted.
    R(q) == R(-q).
    """
    w, x, y, z = quat_normalize(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_quat(rot: np.ndarray) -> np.ndarray:
    """Convert a 3x3 rotation matrix to a unit quaternion (w, x, y, z)."""
    m = np.asarray(rot, dtype=float)
    trace = m[0, 0] + m[1, 1] + m[2, 2]
    if trace > 0:
        s = 0.5 / np.sqrt(trace + 1.0)
        w = 0.25 / s
        x = (m[2, 1] - m[1, 2]) * s
        y = (m[0, 2] - m[2, 0]) * s
        z = (m[1, 0] - m[0, 1]) * s
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = 2.0 * np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        w = (m[2, 1] - m[1, 2]) / s
        x = 0.25 * s
        y = (m[0, 1] + m[1, 0]) / s
        z = (m[0, 2] + m[2, 0]) / s
    elif m[1, 1] > m[2, 2]:
        s = 2.0 * np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
        w = (m[0, 2] - m[2, 0]) / s
        x = (m[0, 1] + m[1, 0]) / s
        y = 0.25 * s
        z = (m[1, 2] + m[2, 1]) / s
    else:
        s = 2.0 * np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
        w = (m[1, 0] - m[0, 1]) / s
        x = (m[0, 2] + m[2, 0]) / s
        y = (m[1, 2] + m[2, 1]) / s
        z = 0.25 * s
    return quat_normalize(np.array([w, x, y, z]))


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    """Unit quaternion for a rotation of `angle` radians about `axis`."""
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n < 1e-12:
        raise InvalidInputError("rotation axis must be nonzero")
    half = 0.5 * angle
    return np.concatenate(([np.cos(half)], np.sin(half) * axis / n))


def project_center(translation, intrinsics: CameraIntrinsics) -> tuple[float, float]:
    """Project a 3D camera-frame point to pixel coordinates (cx, cy)."""
    t = np.asarray(translation, dtype=float).reshape(3)
    if t[2] <= 0:
        raise BehindCameraError(f"cannot project a point with Tz={t[2]} <= 0")
    cx = intrinsics.fx * t[0] / t[2] + intrinsics.px
    cy = intrinsics.fy * t[1] / t[2] + intrinsics.py
    return float(cx), float(cy)


def recover_translation(c_box, delta_c, tz: float, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Invert the projection: pixel center + correction + depth -> 3D translation.

    `c_box` is the detected 2D center (cx, cy) and `delta_c` the regressed
    correction (dcx, dcy), both in pixels.
    """
    if tz <= 0:
        raise InvalidInputError(f"depth must be positive, got Tz={tz}")
    cx, cy = float(c_box[0]), float(c_box[1])
    dcx, dcy = float(delta_c[0]), float(delta_c[1])
    tx = (cx + dcx - intrinsics.px) * tz / intrinsics.fx
    ty = (cy + dcy - intrinsics.py) * tz / intrinsics.fy
    return np.array([tx, ty, float(tz)])


def validate_extrinsic(m, tol: float = 1e-6) -> np.ndarray:
    """Check a 4x4 world-to-camera rigid transform and return it as float64."""
    m = np.asarray(m, dtype=float)
    if m.shape != (4, 4):
        raise InvalidInputError(f"extrinsic must be 4x4, got {m.shape}")
    r = m[:3, :3]
    if np.max(np.abs(r @ r.T - np.eye(3))) > tol:
        raise InvalidInputError("extrinsic rotation block is not orthonormal")
    if np.max(np.abs(m[3] - np.array([0.0, 0.0, 0.0, 1.0]))) > tol:
        raise InvalidInputError("extrinsic bottom row must be (0, 0, 0, 1)")
    return m


def relative_transform(m_prev, m_curr) -> np.ndarray:
    """Transform taking points from the previous camera frame to the current one.

    Returns M_curr @ inv(M_prev).
    """
    m_prev = validate_extrinsic(m_prev)
    m_curr = validate_extrinsic(m_curr)
    # Rigid inverse is exact and better conditioned than a generic solve.
    inv_prev = np.eye(4)
    r = m_prev[:3, :3]
    inv_prev[:3, :3] = r.T
    inv_prev[:3, 3] = -r.T @ m_prev[:3, 3]
    return m_curr @ inv_prev


def rotation_angle_between(q1, q2) -> float:
    """Geodesic rotation angle between two quaternions, in [0, pi].

    Invariant under sign flip of either argument (double cover).
    """
    a = quat_normalize(q1)
    b = quat_normalize(q2)
    dot = min(1.0, abs(float(np.dot(a, b))))
    return 2.0 * np.arccos(dot)


def translation_distance(t1, t2) -> float:
    """Euclidean distance between two translation vectors."""
    return float(np.linalg.norm(np.asarray(t1, dtype=float) - np.asarray(t2, dtype=float)))
