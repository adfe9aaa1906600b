"""
primitives.py

Procedural meshes for tests, demos and the bundled assets: boxes, slabs, icospheres,
cylinders, extruded prisms (the wedge), a tote, a plate with a through-hole and an
L-shaped composite. Shapes come from trimesh.creation; composites stack closed parts.

Author: GraspLab Team
"""

from typing import Sequence

import numpy as np
import trimesh

from .mesh import TriMesh
from .utils import validate_count, validate_positive


def _translated(mesh: trimesh.Trimesh, center: Sequence[float]) -> trimesh.Trimesh:
    mesh.apply_translation(np.asarray(center, dtype=float))
    return mesh


def _box_part(extents: Sequence[float], center: Sequence[float] = (0.0, 0.0, 0.0)) -> trimesh.Trimesh:
    ex = np.asarray(extents, dtype=float)
    for k, e in zip("xyz", ex):
        validate_positive(f"extent_{k}", float(e))
    return _translated(trimesh.creation.box(extents=ex), center)


def box(extents: Sequence[float] = (1.0, 1.0, 1.0), center: Sequence[float] = (0.0, 0.0, 0.0),
        name: str = "box") -> TriMesh:
    return TriMesh.from_trimesh(_box_part(extents, center), name=name)


def slab(size: float = 0.5, thickness: float = 0.02, name: str = "slab") -> TriMesh:
    """Square slab whose top face lies at z = 0."""
    return box((size, size, thickness), (0.0, 0.0, -thickness / 2.0), name=name)


def icosphere(radius: float = 1.0, subdivisions: int = 3, center: Sequence[float] = (0.0, 0.0, 0.0),
              name: str = "icosphere") -> TriMesh:
    validate_positive("radius", radius)
    validate_count("subdivisions", subdivisions, minimum=0)
    sphere = trimesh.creation.icosphere(subdivisions=subdivisions, radius=radius)
    return TriMesh.from_trimesh(_translated(sphere, center), name=name)


def extrude(profile: Sequence[Sequence[float]], length: float, name: str = "prism") -> TriMesh:
    """
    Convex polygon `profile` given in the x-z plane, extruded symmetrically along y.
    """
    validate_positive("length", length)
    prof = np.asarray(profile, dtype=float).reshape(-1, 2)
    fan = np.array([(0, i, i + 1) for i in range(1, len(prof) - 1)])
    prism = trimesh.creation.extrude_triangulation(prof, fan, length)
    # profile (a, b) at height h maps to (a, length / 2 - h, b)
    to_xz = np.array([[1.0, 0.0, 0.0, 0.0],
                      [0.0, 0.0, -1.0, length / 2.0],
                      [0.0, 1.0, 0.0, 0.0],
                      [0.0, 0.0, 0.0, 1.0]])
    prism.apply_transform(to_xz)
    return TriMesh.from_trimesh(prism, name=name)


def wedge(apex_angle_deg: float = 45.0, height: float = 0.05, length: float = 0.2, name: str = "wedge") -> TriMesh:
    """Triangular prism, apex up at z = height, base on z = 0, extruded along y."""
    half_base = height * np.tan(np.radians(apex_angle_deg) / 2.0)
    return extrude([(-half_base, 0.0), (half_base, 0.0), (0.0, height)], length, name=name)


def cylinder(radius: float = 0.02, height: float = 0.1, segments: int = 32,
             center: Sequence[float] = (0.0, 0.0, 0.0), name: str = "cylinder") -> TriMesh:
    """Closed cylinder about z."""
    validate_positive("radius", radius)
    validate_positive("height", height)
    validate_count("segments", segments, minimum=3)
    solid = trimesh.creation.cylinder(radius=radius, height=height, sections=segments)
    return TriMesh.from_trimesh(_translated(solid, center), name=name)


def _composite(parts: Sequence[trimesh.Trimesh], name: str) -> TriMesh:
    """Stack closed parts without merging coincident vertices, so each part stays closed."""
    offsets = np.cumsum([0] + [len(p.vertices) for p in parts[:-1]])
    vertices = np.vstack([np.asarray(p.vertices) for p in parts])
    faces = np.vstack([np.asarray(p.faces) + off for p, off in zip(parts, offsets)])
    return TriMesh(vertices, faces, name=name)


def tote(inner: Sequence[float] = (0.4, 0.3, 0.2), wall: float = 0.01, name: str = "tote") -> TriMesh:
    """Open-top bin; the inner floor is at z = 0 and centred on the origin."""
    lx, ly, h = (float(v) for v in inner)
    ox, oy = lx + 2 * wall, ly + 2 * wall
    zc = h / 2.0
    return _composite([
        _box_part((ox, oy, wall), (0.0, 0.0, -wall / 2.0)),
        _box_part((wall, oy, h), (-(lx + wall) / 2.0, 0.0, zc)),
        _box_part((wall, oy, h), ((lx + wall) / 2.0, 0.0, zc)),
        _box_part((lx, wall, h), (0.0, -(ly + wall) / 2.0, zc)),
        _box_part((lx, wall, h), (0.0, (ly + wall) / 2.0, zc)),
    ], name)


def plate_with_hole(size: float = 0.1, hole: float = 0.01, thickness: float = 0.01,
                    name: str = "plate_with_hole") -> TriMesh:
    """
    Square plate (top face at z = 0) with a square through-hole of side `hole` at its centre.
    """
    rim = (size - hole) / 2.0
    z = -thickness / 2.0
    offset = (hole + rim) / 2.0
    return _composite([
        _box_part((rim, size, thickness), (-offset, 0.0, z)),
        _box_part((rim, size, thickness), (offset, 0.0, z)),
        _box_part((hole, rim, thickness), (0.0, -offset, z)),
        _box_part((hole, rim, thickness), (0.0, offset, z)),
    ], name)


def l_shape(lower: Sequence[float] = (0.2, 0.1, 0.05), upper: Sequence[float] = (0.1, 0.1, 0.05),
            name: str = "l_shape") -> TriMesh:
    """
    Two stacked boxes: `upper` sits on `lower`, flush with its -x end. The lower box is
    centred at the origin.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    upper_center = (-(lower[0] - upper[0]) / 2.0, 0.0, (lower[2] + upper[2]) / 2.0)
    return _composite([_box_part(lower), _box_part(upper, upper_center)], name)
