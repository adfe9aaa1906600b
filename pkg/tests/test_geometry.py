"""
Unit tests for src.geometry in GraspLab.
Covers:
- RigidTransform invariants (orthonormality, associativity, inverse)
- Pose matrix parsing and validation
- Frames and the look_at camera pose

Author: GraspLab Team
"""

import numpy as np
import pytest

from src.errors import ValidationError
from src.geometry import RigidTransform, frame_from_z, look_at, normalize, orthonormal_frame

A = RigidTransform.from_axis_angle([0, 0, 1], 0.3, translation=[1.0, 2.0, 3.0])
B = RigidTransform.from_axis_angle([1, 0, 0], 1.1, translation=[0.0, -1.0, 0.5])
C = RigidTransform.from_axis_angle([1, 1, 0], -0.7)


def test_rotation_is_orthonormal():
    for T in (A, B, C, A @ B @ C):
        assert T.rotation.T @ T.rotation == pytest.approx(np.eye(3), abs=1e-12)
        assert np.linalg.det(T.rotation) == pytest.approx(1.0)


def test_compose_is_associative_and_applies_right_first():
    assert ((A @ B) @ C).matrix() == pytest.approx((A @ (B @ C)).matrix(), abs=1e-12)
    p = np.array([[0.1, -0.2, 0.3], [1.0, 1.0, 1.0]])
    assert (A @ B).apply(p) == pytest.approx(A.apply(B.apply(p)))


def test_inverse():
    for T in (A, B, C):
        assert T.compose(T.inverse()).matrix() == pytest.approx(np.eye(4), abs=1e-12)
        assert T.inverse().compose(T).matrix() == pytest.approx(np.eye(4), abs=1e-12)


def test_apply_vector_ignores_translation():
    T = RigidTransform.from_translation([5.0, 0.0, 0.0])
    assert T.apply_vector([0.0, 0.0, 1.0]) == pytest.approx([0.0, 0.0, 1.0])
    assert T.apply([0.0, 0.0, 1.0]) == pytest.approx([5.0, 0.0, 1.0])


def test_matrix_list_round_trip():
    values = A.to_list()
    assert len(values) == 16
    assert values[3] == pytest.approx(1.0)
    assert RigidTransform.from_matrix(values).matrix() == pytest.approx(A.matrix())


@pytest.mark.parametrize("matrix", [
    [0.0] * 15,
    np.diag([1.0, 1.0, 1.0, 2.0]),
    np.diag([1.0, 1.0, -1.0, 1.0]),
    np.diag([2.0, 1.0, 1.0, 1.0]),
])
def test_from_matrix_rejects_invalid(matrix):
    with pytest.raises(ValidationError):
        RigidTransform.from_matrix(matrix)


def test_non_finite_translation_rejected():
    with pytest.raises(ValidationError):
        RigidTransform(np.eye(3), [0.0, np.nan, 0.0])


@pytest.mark.parametrize("z", [[0, 0, 1], [0, 0, -1], [1, 0, 0], [0.3, -0.4, 0.866]])
def test_orthonormal_frame_is_right_handed(z):
    z = normalize(np.array(z, dtype=float))
    x, y = orthonormal_frame(z)
    assert np.cross(x, y) == pytest.approx(z)
    assert np.dot(x, z) == pytest.approx(0.0, abs=1e-12)
    frame = frame_from_z(np.array([1.0, 2.0, 3.0]), z)
    assert frame.rotation[:, 2] == pytest.approx(z)
    assert frame.translation == pytest.approx([1.0, 2.0, 3.0])


def test_normalize_keeps_zero_vectors():
    out = normalize(np.array([[3.0, 4.0, 0.0], [0.0, 0.0, 0.0]]))
    assert out[0] == pytest.approx([0.6, 0.8, 0.0])
    assert out[1] == pytest.approx([0.0, 0.0, 0.0])


def test_look_at_opencv_axes():
    pose = look_at([0.0, 0.0, 1.0], [0.0, 0.0, 0.0], up=[0.0, 1.0, 0.0])
    assert pose.rotation[:, 0] == pytest.approx([1.0, 0.0, 0.0])
    assert pose.rotation[:, 1] == pytest.approx([0.0, -1.0, 0.0])
    assert pose.rotation[:, 2] == pytest.approx([0.0, 0.0, -1.0])
    assert pose.translation == pytest.approx([0.0, 0.0, 1.0])
    # up parallel to the view direction falls back to a fixed helper axis
    straight = look_at([0.0, 0.0, 1.0], [0.0, 0.0, 0.0])
    assert straight.rotation == pytest.approx(pose.rotation)
