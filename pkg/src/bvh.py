"""
bvh.py

Bounding volume hierarchy over triangles and the vectorized intersection kernels it
uses. Traversal is batched: a whole bundle of rays descends the tree together and is
filtered at each node with numpy, so Python-level work scales with the node count
rather than with the ray count.

Author: GraspLab Team
"""

from typing import List, Tuple

import numpy as np

from .config import MESH_DEFAULTS

DET_EPS = MESH_DEFAULTS["det_epsilon"]
MIN_HIT = MESH_DEFAULTS["min_hit_distance"]
BARY_EPS = 1e-12


def moller_trumbore(origins, directions, v0, e1, e2, min_distance: float = MIN_HIT):
    """
    Broadcasting Möller-Trumbore ray/triangle test.

    Shapes broadcast over the leading axes, e.g. rays (R, 1, 3) against triangles
    (1, T, 3). Returns (t, u, v) with t = inf where there is no hit.
    """
    p = np.cross(directions, e2)
    det = np.sum(e1 * p, axis=-1)
    valid = np.abs(det) > DET_EPS
    inv_det = np.divide(1.0, det, out=np.zeros_like(det), where=valid)
    s = origins - v0
    u = np.sum(s * p, axis=-1) * inv_det
    q = np.cross(s, e1)
    v = np.sum(directions * q, axis=-1) * inv_det
    t = np.sum(e2 * q, axis=-1) * inv_det
    hit = valid & (u >= -BARY_EPS) & (v >= -BARY_EPS) & (u + v <= 1.0 + BARY_EPS) & (t >= min_distance)
    return np.where(hit, t, np.inf), u, v


def triangles_overlap_box(triangles: np.ndarray, half: np.ndarray) -> np.ndarray:
    """
    Exact separating-axis test of triangles (T, 3, 3), expressed in the box frame,
    against the axis-aligned box [-half, half]. Touching counts as overlap.
    """
    tri = np.asarray(triangles, dtype=float)
    half = np.asarray(half, dtype=float)
    if tri.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    separated = np.zeros(tri.shape[0], dtype=bool)

    # box face normals
    separated |= np.any(tri.min(axis=1) > half, axis=1)
    separated |= np.any(tri.max(axis=1) < -half, axis=1)

    edges = np.stack([tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 1], tri[:, 0] - tri[:, 2]], axis=1)

    # triangle normal
    normal = np.cross(edges[:, 0], edges[:, 1])
    offset = np.sum(normal * tri[:, 0], axis=1)
    radius = np.abs(normal) @ half
    separated |= np.abs(offset) > radius

    # edge cross products
    for k in range(3):
        box_axis = np.zeros(3)
        box_axis[k] = 1.0
        for j in range(3):
            axis = np.cross(box_axis, edges[:, j])
            proj = np.einsum("tvc,tc->tv", tri, axis)
            r = np.abs(axis) @ half
            separated |= (proj.min(axis=1) > r) | (proj.max(axis=1) < -r)
    return ~separated


class BVH:
    """
    Median-split BVH over a triangle soup (T, 3, 3). Immutable after construction.
    """

    def __init__(self, triangles: np.ndarray, leaf_size: int = MESH_DEFAULTS["bvh_leaf_size"]):
        tri = np.asarray(triangles, dtype=float)
        self.v0 = tri[:, 0]
        self.e1 = tri[:, 1] - tri[:, 0]
        self.e2 = tri[:, 2] - tri[:, 0]
        self.leaf_size = max(1, int(leaf_size))
        self._build(tri)

    def _build(self, tri: np.ndarray):
        tri_lo = tri.min(axis=1)
        tri_hi = tri.max(axis=1)
        centroids = tri.mean(axis=1)
        lo: List[np.ndarray] = []
        hi: List[np.ndarray] = []
        left: List[int] = []
        right: List[int] = []
        start: List[int] = []
        count: List[int] = []
        order: List[np.ndarray] = []
        cursor = 0

        def new_node(idx):
            node_lo = tri_lo[idx].min(axis=0)
            node_hi = tri_hi[idx].max(axis=0)
            pad = 1e-9 * (1.0 + np.abs(node_hi - node_lo).max())
            lo.append(node_lo - pad)
            hi.append(node_hi + pad)
            left.append(-1)
            right.append(-1)
            start.append(0)
            count.append(0)
            return len(lo) - 1

        root = new_node(np.arange(len(tri)))
        stack = [(root, np.arange(len(tri)))]
        while stack:
            node, idx = stack.pop()
            c = centroids[idx]
            extent = c.max(axis=0) - c.min(axis=0)
            if len(idx) <= self.leaf_size or extent.max() <= 0.0:
                start[node] = cursor
                count[node] = len(idx)
                order.append(idx)
                cursor += len(idx)
                continue
            axis = int(np.argmax(extent))
            mid = len(idx) // 2
            part = np.argpartition(c[:, axis], mid)
            a, b = idx[part[:mid]], idx[part[mid:]]
            left[node] = new_node(a)
            right[node] = new_node(b)
            # right pushed first so that the left subtree is laid out first
            stack.append((right[node], b))
            stack.append((left[node], a))

        self.node_lo = np.array(lo)
        self.node_hi = np.array(hi)
        self.left = np.array(left, dtype=np.int64)
        self.right = np.array(right, dtype=np.int64)
        self.start = np.array(start, dtype=np.int64)
        self.count = np.array(count, dtype=np.int64)
        self.order = np.concatenate(order) if order else np.zeros(0, dtype=np.int64)

    @property
    def node_count(self) -> int:
        return len(self.node_lo)

    def _leaf_triangles(self, node: int) -> np.ndarray:
        s = self.start[node]
        return self.order[s:s + self.count[node]]

    def _slab(self, node: int, origins: np.ndarray, inv_dir: np.ndarray):
        t1 = (self.node_lo[node] - origins) * inv_dir
        t2 = (self.node_hi[node] - origins) * inv_dir
        tnear = np.minimum(t1, t2).max(axis=1)
        tfar = np.maximum(t1, t2).min(axis=1)
        return tnear, tfar

    @staticmethod
    def _inverse_directions(directions: np.ndarray) -> np.ndarray:
        safe = np.where(np.abs(directions) < 1e-15, np.where(directions < 0, -1e-15, 1e-15), directions)
        return 1.0 / safe

    def intersect(self, origins: np.ndarray, directions: np.ndarray, max_distance=np.inf
                  ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """
        Nearest hit per ray. Returns (triangle, t, u, v); triangle = -1 on a miss.
        """
        origins = np.asarray(origins, dtype=float).reshape(-1, 3)
        directions = np.asarray(directions, dtype=float).reshape(-1, 3)
        n = len(origins)
        best_t = np.full(n, np.inf)
        best_tri = np.full(n, -1, dtype=np.int64)
        best_u = np.zeros(n)
        best_v = np.zeros(n)
        limit = np.broadcast_to(np.asarray(max_distance, dtype=float), (n,))
        if n == 0 or len(self.v0) == 0:
            return best_tri, best_t, best_u, best_v
        inv_dir = self._inverse_directions(directions)

        stack = [(0, np.arange(n))]
        while stack:
            node, rays = stack.pop()
            tnear, tfar = self._slab(node, origins[rays], inv_dir[rays])
            bound = np.minimum(best_t[rays], limit[rays])
            keep = (tfar >= np.maximum(tnear, 0.0)) & (tnear <= bound)
            rays = rays[keep]
            if len(rays) == 0:
                continue
            if self.left[node] >= 0:
                stack.append((self.right[node], rays))
                stack.append((self.left[node], rays))
                continue
            tris = self._leaf_triangles(node)
            t, u, v = moller_trumbore(origins[rays, None, :], directions[rays, None, :],
                                      self.v0[None, tris], self.e1[None, tris], self.e2[None, tris])
            j = np.argmin(t, axis=1)
            row = np.arange(len(rays))
            tj = t[row, j]
            better = (tj < best_t[rays]) & (tj <= limit[rays])
            upd = rays[better]
            best_t[upd] = tj[better]
            best_tri[upd] = tris[j[better]]
            best_u[upd] = u[row, j][better]
            best_v[upd] = v[row, j][better]
        return best_tri, best_t, best_u, best_v

    def intersect_all(self, origin: np.ndarray, direction: np.ndarray, max_distance: float = np.inf
                      ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """
        Every hit along one ray, sorted by distance: (triangles, t, u, v).
        """
        o = np.asarray(origin, dtype=float).reshape(1, 3)
        d = np.asarray(direction, dtype=float).reshape(1, 3)
        inv_dir = self._inverse_directions(d)
        found_tri, found_t, found_u, found_v = [], [], [], []
        if len(self.v0) == 0:
            empty = np.zeros(0)
            return empty.astype(np.int64), empty, empty, empty
        stack = [0]
        while stack:
            node = stack.pop()
            tnear, tfar = self._slab(node, o, inv_dir)
            if not (tfar[0] >= max(tnear[0], 0.0) and tnear[0] <= max_distance):
                continue
            if self.left[node] >= 0:
                stack.extend((self.right[node], self.left[node]))
                continue
            tris = self._leaf_triangles(node)
            t, u, v = moller_trumbore(o, d, self.v0[tris], self.e1[tris], self.e2[tris])
            hit = np.isfinite(t) & (t <= max_distance)
            found_tri.append(tris[hit])
            found_t.append(t[hit])
            found_u.append(u[hit])
            found_v.append(v[hit])
        if not found_t:
            empty = np.zeros(0)
            return empty.astype(np.int64), empty, empty, empty
        tris = np.concatenate(found_tri)
        ts = np.concatenate(found_t)
        us = np.concatenate(found_u)
        vs = np.concatenate(found_v)
        srt = np.lexsort((tris, ts))
        return tris[srt], ts[srt], us[srt], vs[srt]

    def query_aabb(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """
        Indices of triangles whose leaf boxes overlap the axis-aligned box [lo, hi].
        """
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        out = []
        if len(self.v0) == 0:
            return np.zeros(0, dtype=np.int64)
        stack = [0]
        while stack:
            node = stack.pop()
            if np.any(self.node_lo[node] > hi) or np.any(self.node_hi[node] < lo):
                continue
            if self.left[node] >= 0:
                stack.extend((self.right[node], self.left[node]))
            else:
                out.append(self._leaf_triangles(node))
        if not out:
            return np.zeros(0, dtype=np.int64)
        return np.sort(np.concatenate(out))
