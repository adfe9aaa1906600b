"""
scene_labels.py

Image-space scene labels for GraspLab.
Includes:
    - render_maps: ray-cast instance-ID, depth and amodal masks with occlusion scores
    - relation_matrix / layer_graph: pairwise occlusion relations and manipulation layers
    - difficulty: five-level scene difficulty from layers, occlusion, completeness and
      class uniqueness (measure_difficulty_features extracts these from the maps)
    - project_keypoints: pinhole projection with ray-traced visibility
    - com_heatmap: Gaussian heat map around the projected center of mass

Author: GraspLab Team
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .config import SCENE_DEFAULTS
from .mesh import mass_properties
from .raycast import raycast_batch
from .scene import TOTE_ID, Camera, Scene, nearest_scene_hits
from .utils import get_logger, validate_positive

logger = get_logger(__name__)


@dataclass(frozen=True)
class InstanceMaps:
    """
    Rendered maps of one viewpoint. `amodal` is (N, H, W) in scene instance order.
    """
    instance_ids: Tuple[int, ...]
    id_image: np.ndarray
    depth: np.ndarray
    amodal: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.id_image.shape

    def visible_mask(self, k: int) -> np.ndarray:
        return self.id_image == self.instance_ids[k]

    def occluded_mask(self, k: int) -> np.ndarray:
        return self.amodal[k] & ~self.visible_mask(k)

    def total_pixels(self) -> np.ndarray:
        return self.amodal.reshape(len(self.instance_ids), -1).sum(axis=1)

    def visible_pixels(self) -> np.ndarray:
        return np.array([int(self.visible_mask(k).sum()) for k in range(len(self.instance_ids))], dtype=np.int64)

    def fully_hidden(self) -> List[bool]:
        return [bool(t > 0 and v == 0) for t, v in zip(self.total_pixels(), self.visible_pixels())]

    def occlusion_scores(self) -> List[Optional[float]]:
        """
        |occluded| / |total| per instance; None when the instance is off-screen.
        Fully hidden instances report 1 - 1/|total|.
        """
        scores: List[Optional[float]] = []
        for total, visible in zip(self.total_pixels(), self.visible_pixels()):
            if total == 0:
                scores.append(None)
            elif visible == 0:
                scores.append(1.0 - 1.0 / float(total))
            else:
                scores.append(float(total - visible) / float(total))
        return scores


def _screen_box(camera: Camera, vertices: np.ndarray) -> Optional[Tuple[int, int, int, int]]:
    """Pixel rows/cols (r0, r1, c0, c1) covering the mesh; whole image if it crosses z = 0."""
    uv, z = camera.project(vertices)
    if np.any(z <= camera.near):
        if np.all(z <= camera.near):
            return None
        return 0, camera.height, 0, camera.width
    c0 = int(max(0, np.floor(uv[:, 0].min())))
    c1 = int(min(camera.width, np.ceil(uv[:, 0].max()) + 1))
    r0 = int(max(0, np.floor(uv[:, 1].min())))
    r1 = int(min(camera.height, np.ceil(uv[:, 1].max()) + 1))
    if c0 >= c1 or r0 >= r1:
        return None
    return r0, r1, c0, c1


def render_maps(scene: Scene, camera: Camera) -> InstanceMaps:
    """
    Cast one primary ray per pixel centre. Each instance is cast on its own inside
    its screen bounding box, which gives its amodal mask; the visible ID is the
    nearest instance. The tote hides what lies behind it but renders as background.
    """
    h, w = camera.height, camera.width
    best = np.full(h * w, np.inf)
    ids = np.zeros(h * w, dtype=np.uint16)
    amodal = np.zeros((len(scene.objects), h, w), dtype=bool)
    rows_all, cols_all = np.divmod(np.arange(h * w), w)

    def cast(mesh, box):
        r0, r1, c0, c1 = box
        rr, cc = np.meshgrid(np.arange(r0, r1), np.arange(c0, c1), indexing="ij")
        flat = (rr * w + cc).ravel()
        dirs = camera.pixel_directions(rows_all[flat].astype(float), cols_all[flat].astype(float))
        hits = raycast_batch(mesh, np.broadcast_to(camera.center, dirs.shape), dirs)
        z = camera.z_depth(hits.distances, dirs)
        ok = hits.hit & (z >= camera.near) & (z <= camera.far)
        return flat[ok], hits.distances[ok]

    for k, obj in enumerate(scene.objects):
        box = _screen_box(camera, obj.world_mesh.vertices)
        if box is None:
            continue
        pix, dist = cast(obj.world_mesh, box)
        amodal[k].reshape(-1)[pix] = True
        closer = dist < best[pix]
        best[pix[closer]] = dist[closer]
        ids[pix[closer]] = obj.instance_id

    if scene.world_tote is not None:
        box = _screen_box(camera, scene.world_tote.vertices)
        if box is not None:
            pix, dist = cast(scene.world_tote, box)
            closer = dist < best[pix]
            best[pix[closer]] = dist[closer]
            ids[pix[closer]] = TOTE_ID

    depth = np.zeros(h * w, dtype=np.float32)
    hit = np.isfinite(best)
    if np.any(hit):
        dirs = camera.pixel_directions(rows_all[hit].astype(float), cols_all[hit].astype(float))
        depth[hit] = camera.z_depth(best[hit], dirs)
    logger.debug("Rendered %dx%d maps for %d instances.", w, h, len(scene.objects))
    return InstanceMaps(tuple(scene.instance_ids), ids.reshape(h, w), depth.reshape(h, w), amodal)


def occluder_counts(maps: InstanceMaps) -> np.ndarray:
    """
    counts[i, j]: pixels of instance j's occluded mask where instance i is visible.
    """
    n = len(maps.instance_ids)
    lookup = np.full(max(maps.instance_ids, default=0) + 1, -1, dtype=np.int64)
    lookup[list(maps.instance_ids)] = np.arange(n)
    counts = np.zeros((n, n), dtype=np.int64)
    for j in range(n):
        front = maps.id_image[maps.occluded_mask(j)]
        front = front[front != TOTE_ID]
        if len(front):
            counts[:, j] = np.bincount(lookup[front], minlength=n)
    return counts


def relation_matrix(maps: InstanceMaps) -> np.ndarray:
    """
    N x N matrix: +1 where row occludes column, -1 for the converse, 0 otherwise.
    Pairs that occlude each other are decided by the larger pixel evidence; ties give 0.
    """
    counts = occluder_counts(maps)
    matrix = np.sign(counts - counts.T).astype(np.int64)
    np.fill_diagonal(matrix, 0)
    return matrix


class Layer(str, Enum):
    TOP = "top"
    SECONDARY = "secondary"
    OTHERS = "others"


@dataclass(frozen=True)
class LayerGraph:
    layers: Tuple[Layer, ...]
    edges: Tuple[Tuple[int, int], ...]
    occluder_counts: Tuple[int, ...]
    layer_count: int

    def to_dict(self, instance_ids: Sequence[int]) -> dict:
        return {
            "layers": {str(i): layer.value for i, layer in zip(instance_ids, self.layers)},
            "edges": [[int(instance_ids[a]), int(instance_ids[b])] for a, b in self.edges],
            "layer_count": self.layer_count,
        }


def layer_graph(matrix: np.ndarray) -> LayerGraph:
    """
    Top: no occluders; secondary: exactly one; others: more. Edges run occluder ->
    occluded. layer_count is the number of instances on the longest occluder chain.
    """
    m = np.asarray(matrix)
    n = len(m)
    occluders = (m == 1).sum(axis=0)
    layers = tuple(Layer.TOP if c == 0 else Layer.SECONDARY if c == 1 else Layer.OTHERS for c in occluders)
    edges = tuple((int(i), int(j)) for i, j in zip(*np.nonzero(m == 1)))

    depth = np.ones(n, dtype=np.int64)
    for _ in range(n):
        updated = depth.copy()
        for i, j in edges:
            updated[j] = max(updated[j], depth[i] + 1)
        updated = np.minimum(updated, n)
        if np.array_equal(updated, depth):
            break
        depth = updated
    return LayerGraph(layers, edges, tuple(int(c) for c in occluders), int(depth.max()) if n else 0)


@dataclass(frozen=True)
class DifficultyFeatures:
    layer_count: int
    max_occlusion: float
    instances_complete: bool
    classes_unique: bool


@dataclass(frozen=True)
class DifficultyLevel:
    level: int
    features: DifficultyFeatures

    def to_dict(self) -> dict:
        f = self.features
        return {"level": self.level, "layer_count": f.layer_count, "max_occlusion": f.max_occlusion,
                "instances_complete": f.instances_complete, "classes_unique": f.classes_unique}


def difficulty(features: DifficultyFeatures, layer_limit: int = SCENE_DEFAULTS["level1_layer_limit"],
               occlusion_limit: float = SCENE_DEFAULTS["level1_occlusion_limit"]) -> DifficultyLevel:
    f = features
    if f.instances_complete and f.classes_unique:
        easy = f.layer_count <= layer_limit and f.max_occlusion <= occlusion_limit
        level = 1 if easy else 2
    elif f.classes_unique:
        level = 3
    elif f.instances_complete:
        level = 4
    else:
        level = 5
    return DifficultyLevel(level, features)


def visible_components(mask: np.ndarray, min_pixels: int = SCENE_DEFAULTS["min_component_pixels"]) -> int:
    """4-connected components of at least `min_pixels` pixels."""
    labels, count = ndimage.label(mask)
    if count == 0:
        return 0
    sizes = np.bincount(labels.ravel())[1:]
    return int((sizes >= min_pixels).sum())


def measure_difficulty_features(maps: InstanceMaps, graph: LayerGraph, class_ids: Sequence[int],
                                min_pixels: int = SCENE_DEFAULTS["min_component_pixels"]) -> DifficultyFeatures:
    """
    Features over the rendered instances. An instance is complete when its visible
    mask forms a single significant component. A fully hidden instance is incomplete;
    one whose visible pixels all fall in sub-threshold specks is not.
    """
    totals = maps.total_pixels()
    scores = maps.occlusion_scores()
    rendered = [k for k in range(len(maps.instance_ids)) if totals[k] > 0]
    components = [visible_components(maps.visible_mask(k), min_pixels) for k in rendered]
    visible = maps.visible_pixels()
    complete = all(c == 1 or (c == 0 and visible[k] > 0) for k, c in zip(rendered, components))
    rendered_classes = [class_ids[k] for k in rendered]
    unique = len(set(rendered_classes)) == len(rendered_classes)
    max_occlusion = max((scores[k] for k in rendered), default=0.0)
    return DifficultyFeatures(graph.layer_count, float(max_occlusion), complete, unique)


@dataclass(frozen=True)
class Keypoint:
    id_sem: int
    x: float
    y: float
    id_class: int
    id_instance: int
    visible: bool

    def to_dict(self) -> dict:
        return {"id_sem": self.id_sem, "x": self.x, "y": self.y, "id_class": self.id_class,
                "id_instance": self.id_instance, "visible": self.visible}


def project_keypoints(scene: Scene, camera: Camera,
                      tolerance: float = SCENE_DEFAULTS["visibility_tolerance"]) -> List[Keypoint]:
    """
    Keypoints of every object (mesh frame) projected into the image. Keypoints behind
    the camera are dropped; a keypoint is visible when it lies inside the image and no
    surface is hit before (distance - tolerance) on the ray toward it.
    """
    meshes = scene.world_meshes()
    out: List[Keypoint] = []
    for obj in scene.objects:
        if obj.keypoints is None or len(obj.keypoints) == 0:
            continue
        world = obj.pose.apply(np.asarray(obj.keypoints, dtype=float).reshape(-1, 3))
        uv, z = camera.project(world)
        offsets = world - camera.center
        dist = np.linalg.norm(offsets, axis=1)
        dirs = offsets / dist[:, None]
        t, _ = nearest_scene_hits(meshes, camera.center, dirs, dist + tolerance)
        for k in range(len(world)):
            if not z[k] > 0:
                continue
            inside = bool(camera.in_image(uv[k:k + 1])[0])
            visible = inside and not t[k] < dist[k] - tolerance
            out.append(Keypoint(k, float(uv[k, 0]), float(uv[k, 1]), obj.class_id, obj.instance_id, visible))
    return out


def com_heatmap(scene: Scene, camera: Camera, instance_id: int,
                sigma: float = SCENE_DEFAULTS["heatmap_sigma"]) -> np.ndarray:
    """
    exp(-|p - c|^2 / (2 sigma^2)) over pixel centres p, with c the projected center of
    mass of the instance. Raises NotWatertight for open meshes.
    """
    validate_positive("sigma", sigma)
    com = mass_properties(scene.object(instance_id).world_mesh).center_of_mass
    uv, _ = camera.project(com[None])
    cols = np.arange(camera.width, dtype=float)
    rows = np.arange(camera.height, dtype=float)
    d2 = (cols[None, :] - uv[0, 0]) ** 2 + (rows[:, None] - uv[0, 1]) ** 2
    heat = np.exp(-d2 / (2.0 * sigma ** 2))
    return np.nan_to_num(heat, nan=0.0)
