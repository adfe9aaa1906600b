"""
geometry.py

Rigid transforms and small vector helpers shared by all GraspLab modules.

Author: GraspLab Team
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import ValidationError

ORTHONORMAL_TOL = 1e-6


def normalize(v: np.ndarray, axis: int = -1) -> np.ndarray:
    """
    Normalize vectors along `axis`; zero vectors stay zero.
    """
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v, axis=axis, keepdims=True)
    return np.divide(v, norm, out=np.zeros_like(v), where=norm > 0)


def orthonormal_frame(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Deterministic pair (x, y) completing the unit vector z to a right-handed frame.
    """
    z = normalize(z)
    helper = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    x = normalize(np.cross(helper, z))
    y = np.cross(z, x)
    return x, y


def rotation_about_axis(axis: Sequence[float], angle: float) -> np.ndarray:
    axis = normalize(np.asarray(axis, dtype=float))
    return Rotation.from_rotvec(axis * angle).as_matrix()


def frame_from_z(origin: np.ndarray, z: np.ndarray) -> "RigidTransform":
    x, y = orthonormal_frame(z)
    return RigidTransform(np.column_stack([x, y, normalize(z)]), origin)


def look_at(eye: Sequence[float], target: Sequence[float], up: Sequence[float] = (0.0, 0.0, 1.0)) -> "RigidTransform":
    """
    Camera-to-world pose for an OpenCV camera (x right, y down, z forward) at `eye`.
    """
    eye = np.asarray(eye, dtype=float)
    forward = normalize(np.asarray(target, dtype=float) - eye)
    right = np.cross(forward, np.asarray(up, dtype=float))
    if np.linalg.norm(right) < 1e-9:
        # looking straight along `up`
        right = np.cross(forward, np.array([0.0, 1.0, 0.0]))
    right = normalize(right)
    down = np.cross(forward, right)
    return RigidTransform(np.column_stack([right, down, forward]), eye)


@dataclass(frozen=True)
class RigidTransform:
    """
    Proper rigid motion x -> R x + t (rotation orthonormal with det +1, translation in m).
    """
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
            raise ValidationError("RigidTransform entries must be finite.")
        if np.abs(R.T @ R - np.eye(3)).max() > ORTHONORMAL_TOL or np.linalg.det(R) < 0:
            raise ValidationError("RigidTransform rotation must be orthonormal with det +1.")
        # re-orthonormalize so that R^T R = I holds to machine precision
        u, _, vt = np.linalg.svd(R)
        R = u @ vt
        R.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix) -> "RigidTransform":
        m = np.asarray(matrix, dtype=float)
        if m.size != 16:
            raise ValidationError("A pose needs 16 values (4x4 row-major).")
        m = m.reshape(4, 4)
        if np.abs(m[3] - np.array([0.0, 0.0, 0.0, 1.0])).max() > ORTHONORMAL_TOL:
            raise ValidationError("The last row of a pose must be [0, 0, 0, 1].")
        return cls(m[:3, :3], m[:3, 3])

    @classmethod
    def from_translation(cls, translation) -> "RigidTransform":
        return cls(np.eye(3), translation)

    @classmethod
    def from_axis_angle(cls, axis, angle: float, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        return cls(rotation_about_axis(axis, angle), translation)

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def to_list(self) -> list:
        """16 floats, row-major."""
        return [float(x) for x in self.matrix().reshape(-1)]

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self ∘ other: apply `other` first."""
        return RigidTransform(self.rotation @ other.rotation, self.rotation @ other.translation + self.translation)

    __matmul__ = compose

    def inverse(self) -> "RigidTransform":
        return RigidTransform(self.rotation.T, -self.rotation.T @ self.translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return points @ self.rotation.T + self.translation

    def apply_vector(self, vectors: np.ndarray) -> np.ndarray:
        return np.asarray(vectors, dtype=float) @ self.rotation.T
