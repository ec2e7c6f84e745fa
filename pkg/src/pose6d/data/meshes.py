"""Triangle meshes for the built-in parametric objects (renderer side).

Vertex layouts match the point-set builders in `pose6d.objects`, so poses
and bounding boxes derived from either agree. Faces wind counter-clockwise
seen from outside.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray  # (V, 3)
    faces: np.ndarray     # (F, 3) int

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float))
        object.__setattr__(self, "faces", np.asarray(self.faces, dtype=int))


def cube_mesh(size: float = 1.0) -> TriangleMesh:
    h = size / 2.0
    v = np.array([[sx, sy, sz] for sx in (-h, h) for sy in (-h, h) for sz in (-h, h)])
    # vertex order: index = 4*(x>0) + 2*(y>0) + (z>0)
    faces = np.array([
        [0, 1, 3], [0, 3, 2],  # -x
        [4, 6, 7], [4, 7, 5],  # +x
        [0, 4, 5], [0, 5, 1],  # -y
        [2, 3, 7], [2, 7, 6],  # +y
        [0, 2, 6], [0, 6, 4],  # -z
        [1, 5, 7], [1, 7, 3],  # +z
    ])
    return TriangleMesh(v, faces)


def pyramid_mesh(base: float = 1.0, height: float = 1.0) -> TriangleMesh:
    h = base / 2.0
    v = np.array([
        [-h, -h, 0.0], [h, -h, 0.0], [h, h, 0.0], [-h, h, 0.0], [0.0, 0.0, height],
    ])
    v[:, 2] -= height / 4.0
    faces = np.array([
        [0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4],  # sides
        [0, 3, 1], [1, 3, 2],                          # base (faces -z)
    ])
    return TriangleMesh(v, faces)


def cylinder_mesh(radius: float = 0.5, height: float = 1.0, segments: int = 24) -> TriangleMesh:
    if segments < 3:
        raise InvalidInputError("cylinder mesh needs at least 3 segments")
    theta = np.linspace(0.0, 2 * np.pi, segments, endpoint=False)
    ring = np.stack([radius * np.cos(theta), radius * np.sin(theta)], axis=1)
    bottom = np.hstack([ring, np.full((segments, 1), -height / 2.0)])
    top = np.hstack([ring, np.full((segments, 1), height / 2.0)])
    centers = np.array([[0.0, 0.0, -height / 2.0], [0.0, 0.0, height / 2.0]])
    v = np.vstack([bottom, top, centers])
    cb, ct = 2 * segments, 2 * segments + 1
    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        faces.append([i, j, segments + i])            # side lower
        faces.append([j, segments + j, segments + i])  # side upper
        faces.append([cb, j, i])                       # bottom cap (faces -z)
        faces.append([ct, segments + i, segments + j])  # top cap (faces +z)
    return TriangleMesh(v, np.array(faces))


MESH_BUILDERS = {
    "cube": lambda p: cube_mesh(size=p.get("size", 1.0)),
    "pyramid": lambda p: pyramid_mesh(base=p.get("base", 1.0), height=p.get("height", 1.0)),
    "cylinder": lambda p: cylinder_mesh(radius=p.get("radius", 0.5), height=p.get("height", 1.0),
                                        segments=p.get("segments", 24)),
}


def build_mesh(kind: str, params: dict) -> TriangleMesh:
    if kind not in MESH_BUILDERS:
        raise InvalidInputError(f"unknown mesh kind '{kind}', expected one of {sorted(MESH_BUILDERS)}")
    return MESH_BUILDERS[kind](params)
