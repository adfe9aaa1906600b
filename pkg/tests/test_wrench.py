"""
Unit tests for src.wrench and src.grasp_label in GraspLab.
Covers:
- Gravity torque arithmetic
- Vacuum wrench score limits
- Soft-finger score about the closing axis and the friction slip limit
- Zero limits, mass monotonicity and rigid transform invariance
- Grasp label conversion and dictionary round trip

Author: GraspLab Team
"""

from types import SimpleNamespace

import numpy as np
import pytest

from src.errors import NonPositiveMass, SchemaError
from src.geometry import RigidTransform
from src.grasp_label import GraspLabel, label_from_vacuum, vacuum_sim_score
from src.mesh import mass_properties
from src.primitives import box
from src.suction import SuctionCupParams, VacuumGraspCandidate, evaluate_seal
from src.wrench import contact_frame, gravity_torque, soft_finger_score, vacuum_wrench_score

CUP = SuctionCupParams()


def test_gravity_torque_lever_arm():
    tau = gravity_torque([0.0, 0.0, 0.0], [0.1, 0.0, 0.0], 1.0)
    assert np.linalg.norm(tau) == pytest.approx(0.981)
    assert gravity_torque([0.0, 0.0, 0.0], [0.0, 0.0, -0.2], 1.0) == pytest.approx(np.zeros(3))


def test_vacuum_score_com_below_contact_is_one():
    frame = contact_frame([0.0, 0.0, 0.0], [0.0, 0.0, -1.0])
    result = vacuum_wrench_score([0.0, 0.0, 0.0], frame, [0.0, 0.0, -0.05], 0.5, CUP)
    assert result.score == 1.0
    assert result.torques == pytest.approx(np.zeros(3))


def test_vacuum_score_limits():
    frame = contact_frame([0.0, 0.0, 0.0], [0.0, 0.0, -1.0])
    bending = CUP.vacuum_force * CUP.radius
    # lever arm giving half the bending limit
    mass = 0.5
    arm = 0.5 * bending / (mass * 9.81)
    result = vacuum_wrench_score([0.0, 0.0, 0.0], frame, [arm, 0.0, 0.0], mass, CUP)
    assert result.limits == pytest.approx([bending, bending, CUP.cup_friction * bending])
    assert result.score == pytest.approx(0.5)
    heavy = vacuum_wrench_score([0.0, 0.0, 0.0], frame, [arm, 0.0, 0.0], 10 * mass, CUP)
    assert heavy.score == 0.0


def test_vacuum_torsion_uses_friction_limit():
    # side grasp: gravity torque about the approach axis is torsion
    frame = contact_frame([0.0, 0.0, 0.0], [1.0, 0.0, 0.0])
    result = vacuum_wrench_score([0.0, 0.0, 0.0], frame, [0.0, 0.01, 0.0], 1.0, CUP)
    torsion = CUP.cup_friction * CUP.vacuum_force * CUP.radius
    assert result.torques[2] == pytest.approx(0.0981)
    assert result.score == pytest.approx(max(0.0, 1.0 - 0.0981 / torsion))


def test_non_positive_mass():
    frame = contact_frame([0.0, 0.0, 0.0], [0.0, 0.0, -1.0])
    with pytest.raises(NonPositiveMass):
        vacuum_wrench_score([0.0, 0.0, 0.0], frame, [0.0, 0.0, 0.0], 0.0, CUP)


def _rod_grasp(offset):
    # rod along y, fingers closing along x at y = offset from the center of mass
    return SimpleNamespace(contact_a=np.array([-0.01, offset, 0.0]), contact_b=np.array([0.01, offset, 0.0]),
                           closing_direction=np.array([1.0, 0.0, 0.0]))


def test_soft_finger_through_com_is_one():
    assert soft_finger_score(_rod_grasp(0.0), [0.0, 0.0, 0.0], 0.2).score == 1.0


def test_soft_finger_offset_torque():
    result = soft_finger_score(_rod_grasp(0.02), [0.0, 0.0, 0.0], 0.2)
    assert result.torques[0] == pytest.approx(0.02 * 0.2 * 9.81)
    assert result.limits[0] == pytest.approx(2 * 0.005 * 40.0)
    assert result.score == pytest.approx(1.0 - 0.02 * 0.2 * 9.81 / 0.4)


def test_soft_finger_axis_parallel_to_gravity_is_one():
    grasp = SimpleNamespace(contact_a=np.array([0.0, 0.0, -0.01]), contact_b=np.array([0.0, 0.0, 0.01]),
                            closing_direction=np.array([0.0, 0.0, 1.0]))
    assert soft_finger_score(grasp, [0.05, 0.03, 0.0], 1.0).score == 1.0


def test_vacuum_label_scores():
    cube = box((0.1, 0.1, 0.1))
    props = mass_properties(cube)
    sealed_candidate = VacuumGraspCandidate([0.0, 0.0, 0.05], [0.0, 0.0, -1.0])
    label = label_from_vacuum(sealed_candidate, evaluate_seal(cube, CUP, sealed_candidate), CUP, props)
    assert label.scores["sc_seal"] == 1.0
    assert label.scores["sc_sim"] == 1.0
    assert label.approach == pytest.approx([0.0, 0.0, -1.0])
    assert label.seal["success"] is True

    edge = VacuumGraspCandidate([0.05, 0.0, 0.05], [0.0, 0.0, -1.0])
    failed = label_from_vacuum(edge, evaluate_seal(cube, CUP, edge), CUP, props)
    assert failed.scores == {"sc_seal": 0.0, "sc_sim": 0.0}
    assert failed.seal["failure_reason"] == "ray_miss"
    assert label_from_vacuum(edge, evaluate_seal(cube, CUP, edge), CUP).scores["sc_sim"] is None


def test_vacuum_sim_score_without_mass_is_none():
    assert vacuum_sim_score(np.zeros(3), np.array([0.0, 0.0, -1.0]), CUP, None) is None


def test_grasp_label_dict_round_trip_and_transform():
    pose = RigidTransform.from_axis_angle([0, 0, 1], 0.5, translation=[0.1, 0.0, 0.0])
    label = GraspLabel("parallel_jaw", pose, (np.array([0.0, 0.0, 0.0]), np.array([0.04, 0.0, 0.0])),
                       {"antip": 0.8, "pj_anal": 0.8, "pj_soft": None, "pj_sim": None}, True, 0.04)
    restored = GraspLabel.from_dict(label.to_dict())
    assert restored.pose.matrix() == pytest.approx(pose.matrix())
    assert restored.scores == label.scores
    assert restored.width == 0.04
    moved = label.transformed(RigidTransform.from_translation([0.0, 0.0, 1.0]))
    assert moved.contact_b == pytest.approx([0.04, 0.0, 1.0])
    assert moved.pose.translation == pytest.approx([0.1, 0.0, 1.0])
    assert moved.with_scores(pj_soft=0.5).scores["pj_soft"] == 0.5


def test_grasp_label_schema_errors():
    with pytest.raises(SchemaError) as info:
        GraspLabel.from_dict({"gripper": "magnet"}, "/grasps/3")
    assert info.value.pointer == "/grasps/3/gripper"
    with pytest.raises(SchemaError):
        GraspLabel.from_dict({"gripper": "vacuum", "contacts": [[0, 0, 0]]})


def test_zero_torque_scores_one_even_with_zero_torsion_limit():
    cup = SuctionCupParams(cup_friction=0.0)
    frame = contact_frame([0.0, 0.0, 0.0], [0.0, 0.0, -1.0])
    result = vacuum_wrench_score([0.0, 0.0, 0.0], frame, [0.0, 0.0, -0.05], 0.5, cup)
    assert result.limits[2] == 0.0
    assert result.score == 1.0


def test_torque_against_zero_limit_scores_zero():
    cup = SuctionCupParams(cup_friction=0.0)
    frame = contact_frame([0.0, 0.0, 0.0], [1.0, 0.0, 0.0])
    assert vacuum_wrench_score([0.0, 0.0, 0.0], frame, [0.0, 0.01, 0.0], 1.0, cup).score == 0.0


def test_soft_finger_slips_beyond_friction_limit():
    grasp = _rod_grasp(0.0)
    # weight 1.962 N across the closing axis; 2 * mu * f_n = 2 * 0.02 * 40 = 1.6 N
    assert soft_finger_score(grasp, [0.0, 0.0, 0.0], 0.2, friction=0.02).score == 0.0
    assert soft_finger_score(grasp, [0.0, 0.0, 0.0], 0.2, friction=0.03).score == 1.0
    with pytest.raises(ValueError):
        soft_finger_score(grasp, [0.0, 0.0, 0.0], 0.2, friction=-0.1)


@pytest.mark.parametrize("offset", [0.0, 0.005, 0.01, 0.03])
def test_scores_do_not_increase_with_mass(offset):
    frame = contact_frame([0.0, 0.0, 0.0], [0.0, 0.0, -1.0])
    masses = [0.05, 0.1, 0.5, 1.0, 5.0]
    vacuum = [vacuum_wrench_score([0.0, 0.0, 0.0], frame, [offset, 0.0, -0.02], m, CUP).score for m in masses]
    soft = [soft_finger_score(_rod_grasp(offset), [0.0, 0.0, 0.0], m).score for m in masses]
    for scores in (vacuum, soft):
        assert all(a >= b for a, b in zip(scores, scores[1:]))


def test_scores_invariant_under_joint_rigid_transform():
    T = RigidTransform.from_axis_angle([0.3, -0.5, 0.8], 1.2, translation=[0.4, -0.1, 0.2])
    contact, approach, com, mass = np.array([0.0, 0.0, 0.0]), np.array([0.2, 0.1, -1.0]), np.array([0.01, -0.02, -0.03]), 0.4
    gravity = np.array([0.0, 0.0, -9.81])
    base = vacuum_wrench_score(contact, contact_frame(contact, approach), com, mass, CUP, gravity)
    moved_contact = T.apply(contact)
    moved = vacuum_wrench_score(moved_contact, T.compose(contact_frame(contact, approach)), T.apply(com),
                                mass, CUP, T.apply_vector(gravity))
    assert moved.score == pytest.approx(base.score)
    assert moved.torques == pytest.approx(base.torques, abs=1e-12)

    grasp = _rod_grasp(0.015)
    moved_grasp = SimpleNamespace(contact_a=T.apply(grasp.contact_a), contact_b=T.apply(grasp.contact_b),
                                  closing_direction=T.apply_vector(grasp.closing_direction))
    soft = soft_finger_score(grasp, [0.0, 0.0, 0.0], mass, gravity=gravity)
    soft_moved = soft_finger_score(moved_grasp, T.apply([0.0, 0.0, 0.0]), mass, gravity=T.apply_vector(gravity))
    assert soft_moved.score == pytest.approx(soft.score)
    assert soft_moved.torques == pytest.approx(soft.torques)
