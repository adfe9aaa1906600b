"""
wrench.py

Gravity wrench scores for GraspLab grasp labels.
- vacuum_wrench_score: gravity torque at the cup contact against per-axis cup limits
- soft_finger_score: gravity torque about the closing axis of a parallel-jaw grasp
  against the torsional friction of two soft-finger contacts

Author: GraspLab Team
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import GRIPPER_DEFAULTS, WRENCH_DEFAULTS
from .errors import NonPositiveMass
from .geometry import RigidTransform, frame_from_z, normalize
from .utils import as_vector, clamp, validate_non_negative, validate_positive

DEFAULT_GRAVITY = (0.0, 0.0, -WRENCH_DEFAULTS["gravity"])


@dataclass(frozen=True)
class WrenchScore:
    score: float
    torques: np.ndarray
    limits: np.ndarray


def _check_mass(mass: float):
    if not isinstance(mass, (int, float, np.integer, np.floating)) or not math.isfinite(mass) or mass <= 0:
        raise NonPositiveMass(f"Object mass must be positive, got {mass!r}.")


def _axis_score(torque: float, limit: float) -> float:
    if torque <= 0.0:
        return 1.0
    if limit <= 0.0:
        return 0.0
    return clamp(1.0 - torque / limit, 0.0, 1.0)


def _score(torques: np.ndarray, limits: np.ndarray) -> float:
    return float(min(_axis_score(float(t), float(lim)) for t, lim in zip(torques, limits)))


def gravity_torque(point: Sequence[float], center_of_mass: Sequence[float], mass: float,
                   gravity: Sequence[float] = DEFAULT_GRAVITY) -> np.ndarray:
    """Torque (N m) of the object's weight about `point`."""
    lever = as_vector("center_of_mass", center_of_mass) - as_vector("point", point)
    return np.cross(lever, mass * as_vector("gravity", gravity))


def contact_frame(contact: Sequence[float], approach: Sequence[float]) -> RigidTransform:
    """Contact frame with z along the approach direction."""
    return frame_from_z(as_vector("contact", contact), normalize(as_vector("approach", approach)))


def vacuum_wrench_score(contact: Sequence[float], frame: RigidTransform, center_of_mass: Sequence[float],
                        mass: float, params, gravity: Sequence[float] = DEFAULT_GRAVITY) -> WrenchScore:
    """
    Score a vacuum grasp by the gravity torque it has to hold.

    The torque is expressed in the contact frame (z = approach). Limits are F_p * r
    for bending about x and y, and cup_friction * F_p * r for torsion about z.

    Returns:
        WrenchScore with s = min over axes of clamp(1 - |tau|/limit, 0, 1)
    """
    _check_mass(mass)
    tau = gravity_torque(contact, center_of_mass, mass, gravity)
    local = np.abs(frame.rotation.T @ tau)
    bending = params.vacuum_force * params.radius
    torsion = params.cup_friction * bending
    limits = np.array([bending, bending, torsion])
    return WrenchScore(_score(local, limits), local, limits)


def soft_finger_score(grasp, center_of_mass: Sequence[float], mass: float,
                      friction: float = GRIPPER_DEFAULTS["friction"],
                      torsion_coefficient: float = WRENCH_DEFAULTS["torsion_coefficient"],
                      squeeze_force: float = WRENCH_DEFAULTS["squeeze_force"],
                      gravity: Sequence[float] = DEFAULT_GRAVITY) -> WrenchScore:
    """
    Gravity torque about the closing axis through the contact midpoint, compared to
    the torsional friction limit 2 * gamma * f_n of the two soft fingers.

    The weight component across the closing axis is held by friction at both
    fingers; beyond 2 * mu * f_n the object slips and the score is 0.
    """
    _check_mass(mass)
    validate_non_negative("friction", friction)
    validate_positive("torsion_coefficient", torsion_coefficient)
    validate_positive("squeeze_force", squeeze_force)
    midpoint = 0.5 * (np.asarray(grasp.contact_a, dtype=float) + np.asarray(grasp.contact_b, dtype=float))
    tau = gravity_torque(midpoint, center_of_mass, mass, gravity)
    about_axis = np.array([abs(float(np.dot(tau, grasp.closing_direction)))])
    limit = np.array([2.0 * torsion_coefficient * squeeze_force])
    weight = mass * as_vector("gravity", gravity)
    axis = normalize(np.asarray(grasp.closing_direction, dtype=float))
    tangential = float(np.linalg.norm(weight - np.dot(weight, axis) * axis))
    if tangential > 2.0 * friction * squeeze_force:
        return WrenchScore(0.0, about_axis, limit)
    return WrenchScore(_score(about_axis, limit), about_axis, limit)

