"""
scene.py

Bin-picking scenes for GraspLab.
Includes:
    - SceneObject / Scene: posed instances, optional tote and gravity
    - Camera: pinhole model (OpenCV axes, pixel centres at integer coordinates)
    - hemisphere_viewpoints: cameras spread over a hemisphere around the bin
    - sample_test_scene: non-physical sequential placement without interpenetration
    - filter_grasps_in_scene: visibility and approach-sweep collision filtering of
      object grasp labels, with wrench scores recomputed in the world frame

Author: GraspLab Team
"""

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import trimesh

from .config import SCENE_DEFAULTS
from .errors import NotWatertight, PlacementFailed, ValidationError
from .geometry import RigidTransform, look_at, normalize
from .grasp_label import PARALLEL_JAW, GraspLabel, vacuum_sim_score
from .mesh import MassProperties, TriMesh, mass_properties
from .pj_sampler import GripperGeometry, gripper_boxes
from .raycast import meshes_intersect, raycast_batch
from .suction import SuctionCupParams
from .utils import as_vector, get_logger, rng_for, validate_count, validate_non_negative, validate_positive
from .wrench import soft_finger_score

logger = get_logger(__name__)

TOTE_ID = 0


@dataclass(frozen=True)
class SceneObject:
    instance_id: int
    class_id: int
    mesh: TriMesh
    pose: RigidTransform = field(default_factory=RigidTransform.identity)
    mesh_path: Optional[str] = None
    keypoints: Optional[np.ndarray] = None

    @cached_property
    def world_mesh(self) -> TriMesh:
        return self.mesh.transformed(self.pose)

    @cached_property
    def world_mass_properties(self) -> Optional[MassProperties]:
        try:
            return mass_properties(self.world_mesh)
        except NotWatertight:
            return None


@dataclass(frozen=True)
class Scene:
    objects: Tuple[SceneObject, ...]
    tote: Optional[TriMesh] = None
    tote_pose: RigidTransform = field(default_factory=RigidTransform.identity)
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "gravity", as_vector("gravity", self.gravity))
        ids = [o.instance_id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValidationError("Scene instance ids must be unique.")
        if any(not 1 <= i <= 65535 for i in ids):
            raise ValidationError("Instance ids must lie in [1, 65535]; 0 is the background.")

    @property
    def instance_ids(self) -> List[int]:
        return [o.instance_id for o in self.objects]

    def object(self, instance_id: int) -> SceneObject:
        for o in self.objects:
            if o.instance_id == instance_id:
                return o
        raise KeyError(instance_id)

    @cached_property
    def world_tote(self) -> Optional[TriMesh]:
        return None if self.tote is None else self.tote.transformed(self.tote_pose)

    def world_meshes(self) -> List[Tuple[int, TriMesh]]:
        """(instance id, world mesh) pairs; the tote is reported with id 0."""
        out = [(o.instance_id, o.world_mesh) for o in self.objects]
        if self.world_tote is not None:
            out.append((TOTE_ID, self.world_tote))
        return out


@dataclass(frozen=True)
class Camera:
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    pose: RigidTransform = field(default_factory=RigidTransform.identity)
    near: float = SCENE_DEFAULTS["near"]
    far: float = SCENE_DEFAULTS["far"]

    def __post_init__(self):
        validate_count("width", self.width)
        validate_count("height", self.height)
        validate_positive("fx", self.fx)
        validate_positive("fy", self.fy)
        validate_positive("near", self.near)
        if not self.far > self.near:
            raise ValidationError(f"far ({self.far}) must exceed near ({self.near}).")

    @property
    def center(self) -> np.ndarray:
        return self.pose.translation

    @property
    def optical_axis(self) -> np.ndarray:
        return self.pose.rotation[:, 2]

    def to_camera(self, points: np.ndarray) -> np.ndarray:
        return self.pose.inverse().apply(points)

    def project(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Pixel coordinates (N, 2) as (x, y) and z-depth (N,) of world points. Points
        with z <= 0 get NaN coordinates.
        """
        local = np.atleast_2d(self.to_camera(np.asarray(points, dtype=float)))
        z = local[:, 2]
        safe = np.where(z > 0, z, np.nan)
        uv = np.column_stack([self.fx * local[:, 0] / safe + self.cx, self.fy * local[:, 1] / safe + self.cy])
        return uv, z

    def in_image(self, uv: np.ndarray) -> np.ndarray:
        x, y = uv[:, 0], uv[:, 1]
        return (x >= -0.5) & (x < self.width - 0.5) & (y >= -0.5) & (y < self.height - 0.5)

    def pixel_directions(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Unit world-space directions through the given pixel centres."""
        local = np.column_stack([(cols - self.cx) / self.fx, (rows - self.cy) / self.fy, np.ones(len(rows))])
        return normalize(local @ self.pose.rotation.T)

    def z_depth(self, distances: np.ndarray, directions: np.ndarray) -> np.ndarray:
        return distances * (directions @ self.optical_axis)

    def rescaled(self, resolution: int) -> "Camera":
        """Same field of view on a resolution x resolution image."""
        sx, sy = resolution / self.width, resolution / self.height
        return replace(self, width=resolution, height=resolution, fx=self.fx * sx, fy=self.fy * sy,
                       cx=(self.cx + 0.5) * sx - 0.5, cy=(self.cy + 0.5) * sy - 0.5)

    def to_dict(self) -> dict:
        return {"width": self.width, "height": self.height, "fx": self.fx, "fy": self.fy, "cx": self.cx,
                "cy": self.cy, "pose": self.pose.to_list(), "near": self.near, "far": self.far}


def hemisphere_viewpoints(center: Sequence[float], radius: float, count: int,
                          width: int = SCENE_DEFAULTS["resolution"], height: int = SCENE_DEFAULTS["resolution"],
                          fov_deg: float = 60.0, min_elevation_deg: float = 30.0) -> List[Camera]:
    """
    `count` cameras on a spherical cap above `center`, looking at it. Elevations run
    from straight overhead down to `min_elevation_deg` on a golden-angle spiral.
    """
    validate_count("count", count)
    validate_positive("radius", radius)
    center = as_vector("center", center)
    f = 0.5 * width / math.tan(math.radians(fov_deg) / 2.0)
    lowest = math.sin(math.radians(min_elevation_deg))
    golden = math.pi * (3.0 - math.sqrt(5.0))
    cameras = []
    for k in range(count):
        # uniform in height over the cap
        h = 1.0 - (1.0 - lowest) * (k / (count - 1) if count > 1 else 0.0)
        ring = math.sqrt(max(0.0, 1.0 - h * h))
        azimuth = golden * k
        eye = center + radius * np.array([ring * math.cos(azimuth), ring * math.sin(azimuth), h])
        cameras.append(Camera(width, height, f, f, (width - 1) / 2.0, (height - 1) / 2.0, look_at(eye, center)))
    return cameras


def nearest_scene_hits(meshes: Sequence[Tuple[int, TriMesh]], origins: np.ndarray, directions: np.ndarray,
                       max_distance=np.inf) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nearest hit over several meshes. Returns (distance, owner id); owner is -1 on a miss.
    """
    origins = np.broadcast_to(np.asarray(origins, dtype=float), np.shape(directions))
    best_t = np.full(len(directions), np.inf)
    owner = np.full(len(directions), -1, dtype=np.int64)
    for owner_id, mesh in meshes:
        hits = raycast_batch(mesh, origins, directions, max_distance)
        closer = hits.distances < best_t
        best_t[closer] = hits.distances[closer]
        owner[closer] = owner_id
    return best_t, owner


# ---------------------------------------------------------------- scene sampling

def _support_lift(new: TriMesh, placed: Sequence[TriMesh], grid: int = 8) -> float:
    """
    Smallest upward shift that puts `new` (bottom at z = 0) on the floor or on top of
    already placed geometry below its footprint.
    """
    if not placed:
        return 0.0
    lo, hi = new.bounds
    top = max(m.bounds[1, 2] for m in placed) + hi[2] + 1.0
    gx, gy = np.meshgrid(np.linspace(lo[0], hi[0], grid), np.linspace(lo[1], hi[1], grid))
    queries = [np.column_stack([gx.ravel(), gy.ravel()]), new.vertices[:, :2]]
    for m in placed:
        v = m.vertices[:, :2]
        inside = np.all((v >= lo[:2]) & (v <= hi[:2]), axis=1)
        queries.append(v[inside])
    xy = np.vstack(queries)
    # nudge queries off exact vertices and edges, toward the footprint centre
    xy = xy + 1e-7 * np.sign((lo[:2] + hi[:2]) / 2.0 - xy)

    up = np.tile([0.0, 0.0, 1.0], (len(xy), 1))
    below = np.column_stack([xy, np.full(len(xy), lo[2] - 1.0)])
    bottom = raycast_batch(new, below, up)
    bottom_z = np.where(bottom.hit, below[:, 2] + bottom.distances, np.nan)

    above = np.column_stack([xy, np.full(len(xy), top)])
    support_t, owner = nearest_scene_hits(list(enumerate(placed)), above, -up)
    support_z = np.where(owner >= 0, top - support_t, np.nan)

    both = np.isfinite(bottom_z) & np.isfinite(support_z)
    if not np.any(both):
        return 0.0
    return float(max(0.0, np.max(support_z[both] - bottom_z[both])))


def sample_test_scene(object_set: Sequence[Tuple[int, TriMesh]], count: int, seed: int,
                      bin_extents: Sequence[float] = (0.4, 0.3), tote: Optional[TriMesh] = None,
                      random_yaw: bool = True, max_retries: int = SCENE_DEFAULTS["max_placement_retries"]) -> Scene:
    """
    Place `count` objects (taken from `object_set` in order, cycling) at random x-y and
    yaw inside the bin footprint, each resting on the floor (z = 0) or on earlier objects.

    Raises:
        PlacementFailed: an object found no interpenetration-free placement
    """
    validate_count("count", count)
    if not object_set:
        raise ValidationError("object_set must not be empty.")
    half = np.asarray(bin_extents, dtype=float)[:2] / 2.0
    rng = rng_for(seed)
    objects: List[SceneObject] = []
    placed: List[TriMesh] = []
    for k in range(count):
        class_id, mesh = object_set[k % len(object_set)]
        for attempt in range(max_retries):
            yaw = rng.uniform(0.0, 2.0 * np.pi) if random_yaw else 0.0
            spin = RigidTransform.from_axis_angle((0.0, 0.0, 1.0), yaw)
            spun = mesh.transformed(spin)
            lo, hi = spun.bounds
            x_range = (-half[0] - lo[0], half[0] - hi[0])
            y_range = (-half[1] - lo[1], half[1] - hi[1])
            if x_range[0] > x_range[1] + 1e-12 or y_range[0] > y_range[1] + 1e-12:
                continue
            x = rng.uniform(*x_range) if x_range[1] > x_range[0] else x_range[0]
            y = rng.uniform(*y_range) if y_range[1] > y_range[0] else y_range[0]
            on_floor = RigidTransform.from_translation((x, y, -lo[2])).compose(spin)
            candidate = mesh.transformed(on_floor)
            lift = _support_lift(candidate, placed)
            pose = RigidTransform.from_translation((0.0, 0.0, lift)).compose(on_floor)
            world = mesh.transformed(pose)
            if any(meshes_intersect(world, other) for other in placed):
                logger.debug("Placement %d of object %d interpenetrates; retrying.", attempt, k)
                continue
            objects.append(SceneObject(k + 1, int(class_id), mesh, pose))
            placed.append(world)
            break
        else:
            raise PlacementFailed(f"Could not place object {k + 1} ({mesh.name or 'mesh'}) after {max_retries} tries.")
    logger.info("Sampled a scene with %d objects (seed %d).", count, seed)
    return Scene(tuple(objects), tote)


# ---------------------------------------------------------------- grasp filtering

@dataclass(frozen=True)
class FilteredGrasp:
    instance_id: int
    index: int
    label: GraspLabel
    passed: bool
    causes: Tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"instance_id": self.instance_id, "index": self.index, "passed": self.passed,
                "causes": list(self.causes), "grasp": self.label.to_dict()}


def contacts_visible(scene: Scene, camera: Camera, points: np.ndarray,
                     tolerance: float = SCENE_DEFAULTS["visibility_tolerance"]) -> np.ndarray:
    """
    Per point: in front of the camera, inside the image and not hidden behind any
    scene surface nearer than (distance - tolerance).
    """
    points = np.atleast_2d(points)
    uv, z = camera.project(points)
    offsets = points - camera.center
    dist = np.linalg.norm(offsets, axis=1)
    dirs = normalize(offsets)
    t, _ = nearest_scene_hits(scene.world_meshes(), camera.center, dirs, dist + tolerance)
    unblocked = ~(t < dist - tolerance)
    return (z > camera.near) & camera.in_image(np.nan_to_num(uv, nan=-1.0)) & unblocked


def _tool_boxes(label: GraspLabel, pose: RigidTransform, gripper: GripperGeometry, cup: SuctionCupParams,
                cup_height: float):
    if label.gripper == PARALLEL_JAW:
        return gripper_boxes(pose, label.width if label.width is not None else gripper.max_width, gripper)
    half = np.array([cup.radius, cup.radius, cup_height / 2.0])
    return [(pose.compose(RigidTransform.from_translation((0.0, 0.0, -cup_height / 2.0))), half)]


def _collision_manager(others: Sequence[Tuple[int, TriMesh]]) -> trimesh.collision.CollisionManager:
    manager = trimesh.collision.CollisionManager()
    for owner, mesh in others:
        manager.add_object(str(owner), mesh.tm)
    return manager


def _sweep_collisions(label: GraspLabel, manager: trimesh.collision.CollisionManager, gripper: GripperGeometry,
                      cup: SuctionCupParams, approach_distance: float, step: float, cup_height: float) -> set:
    # The tool retreats along its own approach axis, not a fixed vertical. Top-down
    # grasps in a bin therefore sweep from above; side grasps sweep in from the side.
    steps = max(1, int(math.ceil(approach_distance / step)))
    hit_ids = set()
    approach = label.approach
    for s in np.linspace(approach_distance, 0.0, steps + 1):
        pose = RigidTransform.from_translation(-s * approach).compose(label.pose)
        for box_pose, half in _tool_boxes(label, pose, gripper, cup, cup_height):
            tool = trimesh.creation.box(extents=2.0 * half)
            hit, names = manager.in_collision_single(tool, transform=box_pose.matrix(), return_names=True)
            if hit:
                hit_ids.update(int(n) for n in names)
    return hit_ids


def filter_grasps_in_scene(scene: Scene, camera: Camera, grasps: Mapping[int, Sequence[GraspLabel]],
                           gripper: GripperGeometry = GripperGeometry(), cup: SuctionCupParams = SuctionCupParams(),
                           approach_distance: float = SCENE_DEFAULTS["approach_distance"],
                           step: float = SCENE_DEFAULTS["approach_step"],
                           cup_height: float = SCENE_DEFAULTS["cup_height"]) -> Dict[int, List[FilteredGrasp]]:
    """
    Transform each object's grasps to the world and check them in scene context.

    A grasp passes when at least one contact is visible from the camera and the tool,
    swept along a straight approach of `approach_distance` in steps of at most
    `step`, touches neither another instance nor the tote. Failure causes are
    not_visible, collision_object and collision_tote.
    """
    validate_positive("step", step)
    validate_non_negative("approach_distance", approach_distance)
    meshes = scene.world_meshes()
    out: Dict[int, List[FilteredGrasp]] = {}
    for instance_id, labels in grasps.items():
        obj = scene.object(instance_id)
        manager = _collision_manager([(i, m) for i, m in meshes if i != instance_id])
        props = obj.world_mass_properties
        results = []
        for index, label in enumerate(labels):
            world = label.transformed(obj.pose)
            causes = []
            if not np.any(contacts_visible(scene, camera, np.stack(world.contacts))):
                causes.append("not_visible")
            hit_ids = _sweep_collisions(world, manager, gripper, cup, approach_distance, step, cup_height)
            if any(i != TOTE_ID for i in hit_ids):
                causes.append("collision_object")
            if TOTE_ID in hit_ids:
                causes.append("collision_tote")
            world = _rescore(world, props, gripper, cup, scene.gravity)
            results.append(FilteredGrasp(instance_id, index, world, not causes, tuple(causes)))
        out[instance_id] = results
        logger.debug("Instance %d: %d/%d grasps pass.", instance_id, sum(r.passed for r in results), len(results))
    return out


def _rescore(label: GraspLabel, props: Optional[MassProperties], gripper: GripperGeometry, cup: SuctionCupParams,
             gravity) -> GraspLabel:
    if props is None:
        return label
    if label.gripper == PARALLEL_JAW:
        return label.with_scores(pj_soft=soft_finger_score(label, props.center_of_mass, props.mass, gripper.friction,
                                                           gravity=gravity).score)
    if label.scores.get("sc_seal"):
        return label.with_scores(sc_sim=vacuum_sim_score(label.contact_a, label.approach, cup, props, gravity))
    return label
