"""
pj_sampler.py

Parallel-jaw grasp sampling on a single mesh for GraspLab.
Includes:
    - Friction-cone antipodal test along a closing line through the mesh
    - Robust antipodal score from jittered repetitions (direction and translation noise)
    - Pose expansion around the closing direction
    - Finger/palm box collision filtering with exact triangle-box tests
    - The full sampling pipeline with per-contact random streams

Grasp frame: origin at the contact midpoint, x = closing direction, z = approach,
y = z x x.

Author: GraspLab Team
"""

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import List, NamedTuple, Optional, Tuple, Union

import numpy as np

from .config import GRIPPER_DEFAULTS, PJ_SAMPLER_DEFAULTS
from .errors import NotWatertight, ParseError, ValidationError
from .geometry import RigidTransform, normalize, orthonormal_frame, rotation_about_axis
from .mesh import TriMesh, mass_properties, sample_surface
from .raycast import Ray, box_overlaps_mesh, raycast, raycast_all
from .utils import (get_logger, rng_for, validate_count, validate_keys, validate_non_negative,
                    validate_positive)
from .wrench import soft_finger_score

logger = get_logger(__name__)


@dataclass(frozen=True)
class GripperGeometry:
    finger_width: float = GRIPPER_DEFAULTS["finger_width"]
    finger_depth: float = GRIPPER_DEFAULTS["finger_depth"]
    finger_height: float = GRIPPER_DEFAULTS["finger_height"]
    max_width: float = GRIPPER_DEFAULTS["max_width"]
    palm_width: float = GRIPPER_DEFAULTS["palm_width"]
    palm_depth: float = GRIPPER_DEFAULTS["palm_depth"]
    friction: float = GRIPPER_DEFAULTS["friction"]
    clearance: float = GRIPPER_DEFAULTS["clearance"]

    def __post_init__(self):
        for f in fields(self):
            if f.name == "clearance":
                validate_non_negative(f.name, getattr(self, f.name))
            else:
                validate_positive(f.name, getattr(self, f.name))

    def to_dict(self) -> dict:
        return asdict(self)


def load_gripper(path: Union[str, Path]) -> GripperGeometry:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", str(path), exc.lineno) from exc
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: gripper geometry must be a JSON object.")
    validate_keys("gripper", data, [f.name for f in fields(GripperGeometry)])
    return GripperGeometry(**data)


@dataclass(frozen=True)
class PjSamplerConfig:
    max_grasps: int = PJ_SAMPLER_DEFAULTS["max_grasps"]
    contact_samples: int = PJ_SAMPLER_DEFAULTS["contact_samples"]
    attempts: int = PJ_SAMPLER_DEFAULTS["attempts"]
    rotations: int = PJ_SAMPLER_DEFAULTS["rotations"]
    angle_jitter_deg: float = PJ_SAMPLER_DEFAULTS["angle_jitter_deg"]
    translation_jitter: float = PJ_SAMPLER_DEFAULTS["translation_jitter"]

    def __post_init__(self):
        validate_count("max_grasps", self.max_grasps, minimum=0)
        validate_count("contact_samples", self.contact_samples)
        validate_count("attempts", self.attempts)
        validate_count("rotations", self.rotations)
        validate_non_negative("angle_jitter_deg", self.angle_jitter_deg)
        validate_non_negative("translation_jitter", self.translation_jitter)


class AntipodalContact(NamedTuple):
    """A sampled contact with its nominal antipodal partner and robust score."""
    index: int
    contact_a: np.ndarray
    normal_a: np.ndarray
    contact_b: np.ndarray
    normal_b: np.ndarray
    s_antip: float

    @property
    def closing_direction(self) -> np.ndarray:
        return normalize(self.contact_b - self.contact_a)


@dataclass(frozen=True)
class PjGraspCandidate:
    contact_a: np.ndarray
    contact_b: np.ndarray
    closing_direction: np.ndarray
    pose: RigidTransform
    s_antip: float
    s_pj_anal: float
    s_pj_soft: Optional[float] = None
    collision_free: bool = True
    contact_index: int = 0

    @property
    def width(self) -> float:
        return float(np.linalg.norm(self.contact_b - self.contact_a))

    @property
    def approach(self) -> np.ndarray:
        return self.pose.rotation[:, 2]

    def transformed(self, transform: RigidTransform) -> "PjGraspCandidate":
        return replace(self, contact_a=transform.apply(self.contact_a), contact_b=transform.apply(self.contact_b),
                       closing_direction=transform.apply_vector(self.closing_direction),
                       pose=transform.compose(self.pose))


def is_antipodal_pair(contact_a, normal_a, contact_b, normal_b, friction: float, max_width: float) -> bool:
    """
    Both outward normals lie within friction cone half-angle atan(mu) of the closing
    line, and the contacts are at most `max_width` apart. Symmetric in (a, b).
    """
    line = np.asarray(contact_b, dtype=float) - np.asarray(contact_a, dtype=float)
    width = float(np.linalg.norm(line))
    if width <= 0.0 or width > max_width:
        return False
    line /= width
    cos_cone = math.cos(math.atan(friction))
    return bool(np.dot(-line, normal_a) >= cos_cone and np.dot(line, normal_b) >= cos_cone)


def antipodal_check(mesh: TriMesh, contact_a, normal_a, friction: float, max_width: float,
                    direction=None) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """
    Close a line from `contact_a` along `direction` (default -normal_a) through the
    mesh; the partner is the farthest exit point within `max_width`.

    Returns:
        (contact_b, normal_b) of an antipodal partner, or None
    """
    d = -np.asarray(normal_a, dtype=float) if direction is None else np.asarray(direction, dtype=float)
    hits = raycast_all(mesh, Ray(contact_a, normalize(d)), max_distance=max_width)
    exits = [h for h in hits if np.dot(h.normal, d) > 0.0]
    if not exits:
        return None
    partner = exits[-1]
    if not is_antipodal_pair(contact_a, normal_a, partner.point, partner.normal, friction, max_width):
        return None
    return partner.point, partner.normal


def _jittered_attempt(mesh: TriMesh, point: np.ndarray, normal: np.ndarray, gripper: GripperGeometry,
                      config: PjSamplerConfig, rng: np.random.Generator) -> bool:
    t1, t2 = orthonormal_frame(normal)
    offset = config.translation_jitter * (rng.standard_normal() * t1 + rng.standard_normal() * t2)
    psi = rng.uniform(0.0, 2.0 * np.pi)
    angle = math.radians(config.angle_jitter_deg) * rng.standard_normal()
    axis = math.cos(psi) * t1 + math.sin(psi) * t2
    direction = rotation_about_axis(axis, angle) @ (-normal)

    # re-project the shifted contact onto the surface along the original normal
    standoff = 5.0 * config.translation_jitter + 1e-4
    hit = raycast(mesh, Ray(point + offset + standoff * normal, -normal))
    if hit is None or hit.distance > 2.0 * standoff:
        return False
    return antipodal_check(mesh, hit.point, hit.normal, gripper.friction, gripper.max_width, direction) is not None


def robust_antipodal_score(mesh: TriMesh, point, normal, gripper: GripperGeometry, config: PjSamplerConfig,
                           seed: int, stream: int = 0) -> float:
    """
    Fraction of `config.attempts` jittered antipodal checks that succeed: k / N.
    """
    rng = rng_for(seed, stream)
    point = np.asarray(point, dtype=float)
    normal = normalize(np.asarray(normal, dtype=float))
    successes = sum(_jittered_attempt(mesh, point, normal, gripper, config, rng) for _ in range(config.attempts))
    return successes / config.attempts


def grasp_pose(contact_a, contact_b, angle: float) -> RigidTransform:
    x = normalize(np.asarray(contact_b, dtype=float) - np.asarray(contact_a, dtype=float))
    a, b = orthonormal_frame(x)
    z = math.cos(angle) * a + math.sin(angle) * b
    y = np.cross(z, x)
    return RigidTransform(np.column_stack([x, y, z]), 0.5 * (np.asarray(contact_a) + np.asarray(contact_b)))


def expand_poses(candidate: AntipodalContact, rotations: int) -> List[PjGraspCandidate]:
    """
    `rotations` grasp poses evenly spaced in [0, 2 pi) around the closing direction,
    each inheriting s_pj_anal = s_antip.
    """
    validate_count("rotations", rotations)
    if candidate.s_antip <= 0:
        raise ValidationError("Only contacts with s_antip > 0 are expanded into poses.")
    closing = candidate.closing_direction
    return [
        PjGraspCandidate(contact_a=candidate.contact_a, contact_b=candidate.contact_b, closing_direction=closing,
                         pose=grasp_pose(candidate.contact_a, candidate.contact_b, 2.0 * np.pi * l / rotations),
                         s_antip=candidate.s_antip, s_pj_anal=candidate.s_antip, contact_index=candidate.index)
        for l in range(rotations)
    ]


def gripper_boxes(pose: RigidTransform, width: float, gripper: GripperGeometry) -> List[Tuple[RigidTransform, np.ndarray]]:
    """
    Oriented boxes (pose, half extents) of both fingers opened to `width` and the palm.
    """
    finger_half = np.array([gripper.finger_depth, gripper.finger_width, gripper.finger_height]) / 2.0
    finger_x = width / 2.0 + gripper.clearance + gripper.finger_depth / 2.0
    palm_half = np.array([gripper.max_width + 2.0 * gripper.finger_depth, gripper.palm_width, gripper.palm_depth]) / 2.0
    palm_z = -gripper.finger_height / 2.0 - gripper.palm_depth / 2.0
    local = [((-finger_x, 0.0, 0.0), finger_half), ((finger_x, 0.0, 0.0), finger_half), ((0.0, 0.0, palm_z), palm_half)]
    return [(pose.compose(RigidTransform.from_translation(c)), half) for c, half in local]


def gripper_collision_check(mesh: TriMesh, pose: RigidTransform, gripper: GripperGeometry, width: float) -> bool:
    """True when neither finger nor the palm overlaps any mesh triangle."""
    return not any(box_overlaps_mesh(mesh, box_pose, half) for box_pose, half in gripper_boxes(pose, width, gripper))


def sample_pj_grasps(mesh: TriMesh, gripper: GripperGeometry = GripperGeometry(),
                     config: PjSamplerConfig = PjSamplerConfig(), seed: int = 0) -> List[PjGraspCandidate]:
    """
    Surface sampling, robust antipodal scoring, pose expansion and collision filtering.

    Returns:
        collision-free grasps sorted by s_pj_anal (descending, stable in sampling
        order), capped at config.max_grasps
    """
    samples = sample_surface(mesh, config.contact_samples, seed)
    com, mass = None, None
    if mesh.is_watertight:
        try:
            props = mass_properties(mesh)
            com, mass = props.center_of_mass, props.mass
        except NotWatertight:
            logger.warning("%s has no enclosed volume; s_pj_soft left empty.", mesh.name or "mesh")

    grasps: List[PjGraspCandidate] = []
    contacts = 0
    for i, (p, n) in enumerate(zip(samples.points, samples.normals)):
        nominal = antipodal_check(mesh, p, n, gripper.friction, gripper.max_width)
        if nominal is None:
            continue
        score = robust_antipodal_score(mesh, p, n, gripper, config, seed, i)
        if score <= 0.0:
            continue
        contacts += 1
        for grasp in expand_poses(AntipodalContact(i, p, n, nominal[0], nominal[1], score), config.rotations):
            if not gripper_collision_check(mesh, grasp.pose, gripper, grasp.width):
                continue
            soft = None if com is None else soft_finger_score(grasp, com, mass, gripper.friction).score
            grasps.append(replace(grasp, s_pj_soft=soft))

    grasps.sort(key=lambda g: -g.s_pj_anal)
    logger.info("%s: %d antipodal contacts, %d collision-free grasps (keeping %d).",
                mesh.name or "mesh", contacts, len(grasps), min(len(grasps), config.max_grasps))
    return grasps[:config.max_grasps]
