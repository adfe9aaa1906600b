"""
raycast.py

Ray queries against TriMesh objects.
- raycast: nearest hit of a single ray (BVH accelerated)
- raycast_batch: nearest hits of many rays at once
- raycast_all: every hit along a ray
- raycast_brute_force: all-triangle reference used as a test oracle
- segments_hit_mesh / meshes_intersect: interpenetration checks
- box_overlaps_mesh: exact oriented box vs. mesh overlap

Author: GraspLab Team
"""

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from .bvh import moller_trumbore, triangles_overlap_box
from .geometry import RigidTransform
from .mesh import TriMesh
from .utils import as_unit_vector, as_vector


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", as_vector("origin", self.origin))
        object.__setattr__(self, "direction", as_unit_vector("direction", self.direction))

    def at(self, distance: float) -> np.ndarray:
        return self.origin + distance * self.direction


@dataclass(frozen=True)
class RayHit:
    triangle: int
    distance: float
    point: np.ndarray
    normal: np.ndarray
    barycentric: np.ndarray


class BatchHits(NamedTuple):
    """Nearest hits of a ray bundle; triangle = -1 and distance = inf on a miss."""
    triangles: np.ndarray
    distances: np.ndarray
    points: np.ndarray
    normals: np.ndarray

    @property
    def hit(self) -> np.ndarray:
        return self.triangles >= 0


def _make_hit(mesh: TriMesh, ray: Ray, tri: int, t: float, u: float, v: float, flat: bool = False) -> RayHit:
    normal = mesh.face_normals[tri] if flat else mesh.interpolated_normals(np.array([tri]), np.array([u]), np.array([v]))[0]
    return RayHit(triangle=int(tri), distance=float(t), point=ray.at(t), normal=np.array(normal),
                  barycentric=np.array([1.0 - u - v, u, v]))


def raycast(mesh: TriMesh, ray: Ray, flat_normals: bool = False) -> Optional[RayHit]:
    """
    Nearest intersection along `ray`, or None. Hits closer than the self-intersection
    guard are ignored.
    """
    tri, t, u, v = mesh.bvh.intersect(ray.origin[None], ray.direction[None])
    if tri[0] < 0:
        return None
    return _make_hit(mesh, ray, tri[0], t[0], u[0], v[0], flat_normals)


def raycast_batch(mesh: TriMesh, origins: np.ndarray, directions: np.ndarray, max_distance=np.inf,
                  flat_normals: bool = False) -> BatchHits:
    origins = np.asarray(origins, dtype=float).reshape(-1, 3)
    directions = np.asarray(directions, dtype=float).reshape(-1, 3)
    tri, t, u, v = mesh.bvh.intersect(origins, directions, max_distance)
    hit = tri >= 0
    points = np.full(origins.shape, np.nan)
    normals = np.full(origins.shape, np.nan)
    if np.any(hit):
        points[hit] = origins[hit] + t[hit, None] * directions[hit]
        if flat_normals:
            normals[hit] = mesh.face_normals[tri[hit]]
        else:
            normals[hit] = mesh.interpolated_normals(tri[hit], u[hit], v[hit])
    return BatchHits(tri, t, points, normals)


def raycast_all(mesh: TriMesh, ray: Ray, max_distance: float = np.inf) -> List[RayHit]:
    """
    Every intersection along the ray, nearest first.
    """
    tris, ts, us, vs = mesh.bvh.intersect_all(ray.origin, ray.direction, max_distance)
    return [_make_hit(mesh, ray, tri, t, u, v) for tri, t, u, v in zip(tris, ts, us, vs)]


def raycast_brute_force(mesh: TriMesh, ray: Ray) -> Optional[RayHit]:
    corners = mesh.triangle_vertices
    t, u, v = moller_trumbore(ray.origin, ray.direction, corners[:, 0],
                              corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    j = int(np.argmin(t))
    if not np.isfinite(t[j]):
        return None
    return _make_hit(mesh, ray, j, t[j], u[j], v[j])


def segments_hit_mesh(mesh: TriMesh, starts: np.ndarray, ends: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """
    For each segment, whether it crosses the mesh strictly inside (tol, length - tol).
    """
    starts = np.asarray(starts, dtype=float).reshape(-1, 3)
    ends = np.asarray(ends, dtype=float).reshape(-1, 3)
    delta = ends - starts
    length = np.linalg.norm(delta, axis=1)
    ok = length > 2 * tol
    result = np.zeros(len(starts), dtype=bool)
    if not np.any(ok):
        return result
    dirs = delta[ok] / length[ok, None]
    origins = starts[ok] + tol * dirs
    tri, t, _, _ = mesh.bvh.intersect(origins, dirs, length[ok] - 2 * tol)
    result[np.flatnonzero(ok)] = tri >= 0
    return result


def _edges(mesh: TriMesh):
    tri = mesh.triangles
    edges = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    edges = np.unique(np.sort(edges, axis=1), axis=0)
    return mesh.vertices[edges[:, 0]], mesh.vertices[edges[:, 1]]


def meshes_intersect(a: TriMesh, b: TriMesh, tol: float = 1e-6) -> bool:
    """
    True when the surfaces of `a` and `b` cross: some edge of one mesh passes through
    the interior of a triangle of the other. Surfaces that only touch do not count.
    """
    lo = np.maximum(a.bounds[0], b.bounds[0]) - tol
    hi = np.minimum(a.bounds[1], b.bounds[1]) + tol
    if np.any(lo > hi):
        return False
    for first, second in ((a, b), (b, a)):
        p, q = _edges(first)
        inside = np.all((np.minimum(p, q) <= hi) & (np.maximum(p, q) >= lo), axis=1)
        if np.any(inside) and np.any(segments_hit_mesh(second, p[inside], q[inside], tol)):
            return True
    return False


def box_overlaps_mesh(mesh: TriMesh, pose: RigidTransform, half_extents: Sequence[float]) -> bool:
    """
    Exact test of the oriented box (centre/orientation `pose`, `half_extents`) against
    the mesh triangles. Containment of the whole mesh inside the box counts as overlap.
    """
    half = np.asarray(half_extents, dtype=float)
    world_half = np.abs(pose.rotation) @ half
    candidates = mesh.bvh.query_aabb(pose.translation - world_half, pose.translation + world_half)
    if len(candidates) == 0:
        return False
    local = pose.inverse().apply(mesh.triangle_vertices[candidates].reshape(-1, 3)).reshape(-1, 3, 3)
    return bool(np.any(triangles_overlap_box(local, half)))
