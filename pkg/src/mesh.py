"""
mesh.py

Triangle mesh representation for GraspLab.
Includes:
    - TriMesh: a trimesh.Trimesh with crease-aware corner normals and a lazily built BVH
    - ASCII OBJ and ASCII PLY readers with line-numbered parse errors
    - Area-uniform surface sampling
    - Mass properties of closed meshes

Author: GraspLab Team
"""

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import List, NamedTuple, Optional, Tuple, Union

import numpy as np
import trimesh

from .bvh import BVH
from .config import MESH_DEFAULTS
from .errors import EmptyMesh, NonFiniteVertex, NotWatertight, ParseError, ValidationError
from .geometry import RigidTransform, normalize
from .utils import get_logger, validate_count, validate_positive

logger = get_logger(__name__)

DEGENERATE_AREA = 1e-18


class TriMesh:
    """
    Immutable indexed triangle mesh in meters.

    Normals, areas, bounds, watertightness and mass properties come from the wrapped
    `trimesh.Trimesh` (built unprocessed, so vertex and triangle order is kept).
    Crease-aware corner normals are derived on construction; the ray acceleration
    structure is built on first use.
    """

    def __init__(self, vertices, triangles, crease_angle_deg: float = MESH_DEFAULTS["crease_angle_deg"],
                 name: str = ""):
        vertices = np.array(vertices, dtype=float).reshape(-1, 3)
        triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        if len(triangles) == 0:
            raise EmptyMesh("A mesh needs at least one triangle.")
        if not np.all(np.isfinite(vertices)):
            raise NonFiniteVertex("Mesh vertices must be finite.")
        if triangles.min() < 0 or triangles.max() >= len(vertices):
            raise ValidationError("Triangle index out of range.")

        keep = trimesh.triangles.area(vertices[triangles], sum=False) > DEGENERATE_AREA
        if not np.all(keep):
            logger.warning("Dropping %d degenerate triangle(s)%s.", int((~keep).sum()), f" from {name}" if name else "")
            triangles = triangles[keep]
        if len(triangles) == 0:
            raise EmptyMesh("A mesh needs at least one non-degenerate triangle.")

        self.name = name
        self.crease_angle_deg = float(crease_angle_deg)
        self.tm = trimesh.Trimesh(vertices=vertices, faces=triangles, process=False, validate=False)
        self.vertices = vertices
        self.triangles = triangles
        self.face_normals = np.array(self.tm.face_normals, dtype=float)
        self.face_areas = np.array(self.tm.area_faces, dtype=float)
        self.area = float(self.tm.area)
        self.is_watertight = bool(self.tm.is_watertight and self.tm.is_winding_consistent)
        self.corner_normals = _corner_normals(triangles, self.face_normals, self.face_areas,
                                              math.cos(math.radians(self.crease_angle_deg)))
        for arr in (self.vertices, self.triangles, self.face_normals, self.face_areas, self.corner_normals):
            arr.flags.writeable = False

    @classmethod
    def from_trimesh(cls, mesh: trimesh.Trimesh, name: str = "", **kwargs) -> "TriMesh":
        return cls(np.asarray(mesh.vertices), np.asarray(mesh.faces), name=name, **kwargs)

    def __repr__(self):
        return f"TriMesh(name={self.name!r}, vertices={len(self.vertices)}, triangles={len(self.triangles)})"

    @property
    def triangle_vertices(self) -> np.ndarray:
        return self.vertices[self.triangles]

    @property
    def bounds(self) -> np.ndarray:
        """(2, 3) array of min and max corners of the referenced vertices."""
        used = self.vertices[np.unique(self.triangles)]
        return np.stack([used.min(axis=0), used.max(axis=0)])

    @cached_property
    def bvh(self) -> BVH:
        return BVH(self.triangle_vertices)

    def interpolated_normals(self, triangles: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """
        Unit normals at barycentric coordinates (1-u-v, u, v) of the given triangles.
        """
        cn = self.corner_normals[triangles]
        w = np.stack([1.0 - u - v, u, v], axis=-1)
        n = np.einsum("...k,...kc->...c", w, cn)
        return normalize(n)

    def transformed(self, transform: RigidTransform) -> "TriMesh":
        return TriMesh(transform.apply(self.vertices), self.triangles, self.crease_angle_deg, self.name)


def _corner_normals(triangles: np.ndarray, face_normals: np.ndarray, face_areas: np.ndarray,
                    cos_crease: float) -> np.ndarray:
    """
    Area-weighted normal per triangle corner, averaging only over incident faces whose
    normal lies within the crease angle of the corner's own face.
    """
    corner_vertex = triangles.reshape(-1)
    order = np.argsort(corner_vertex, kind="stable")
    sorted_vertex = corner_vertex[order]
    counts = np.bincount(corner_vertex)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    group_start = starts[sorted_vertex]
    group_size = counts[sorted_vertex]
    position = np.arange(len(order)) - group_start
    own_face = order // 3

    acc = np.zeros((len(order), 3))
    for offset in range(int(counts.max())):
        valid = offset < group_size
        partner = group_start + (position + offset) % group_size
        other_face = own_face[partner]
        agree = valid & (np.sum(face_normals[own_face] * face_normals[other_face], axis=1) >= cos_crease)
        acc += np.where(agree[:, None], face_areas[other_face, None] * face_normals[other_face], 0.0)

    normals = np.empty_like(acc)
    normals[order] = normalize(acc)
    return normals.reshape(-1, 3, 3)


def load_mesh(path: Union[str, Path], fmt: Optional[str] = None) -> TriMesh:
    """
    Read an ASCII OBJ or ASCII PLY mesh (units: meters).
    `fmt` is "obj" or "ply"; inferred from the file suffix when omitted.
    """
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt not in ("obj", "ply"):
        raise ParseError(f"Unsupported mesh format {fmt!r}; expected OBJ or PLY.", str(path))
    with open(path, "r", encoding="utf-8", errors="replace") as handle:
        lines = handle.read().splitlines()
    if fmt == "obj":
        vertices, triangles = _parse_obj(lines, str(path))
    else:
        vertices, triangles = _parse_ply(lines, str(path))
    if not triangles:
        raise EmptyMesh(f"{path}: no triangles found.")
    vertices = np.array(vertices, dtype=float).reshape(-1, 3)
    if not np.all(np.isfinite(vertices)):
        raise NonFiniteVertex(f"{path}: non-finite vertex coordinate.")
    logger.debug("Loaded %s: %d vertices, %d triangles", path, len(vertices), len(triangles))
    return TriMesh(vertices, triangles, name=path.stem)


def _fan(polygon: List[int]) -> List[Tuple[int, int, int]]:
    return [(polygon[0], polygon[i], polygon[i + 1]) for i in range(1, len(polygon) - 1)]


def _parse_obj(lines: List[str], path: str):
    vertices: List[List[float]] = []
    faces: List[Tuple[List[int], int]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise ParseError("vertex needs three coordinates", path, lineno)
            try:
                vertices.append([float(x) for x in parts[1:4]])
            except ValueError:
                raise ParseError(f"bad vertex coordinate in {raw.strip()!r}", path, lineno)
        elif tag == "f":
            if len(parts) < 4:
                raise ParseError("face needs at least three vertices", path, lineno)
            polygon = []
            for token in parts[1:]:
                try:
                    idx = int(token.split("/")[0])
                except ValueError:
                    raise ParseError(f"bad face index {token!r}", path, lineno)
                if idx == 0:
                    raise ParseError("face index 0 is invalid in OBJ", path, lineno)
                polygon.append(idx)
            faces.append((polygon, lineno))
        # vt, vn, g, o, s, usemtl, mtllib: ignored
    triangles = []
    count = len(vertices)
    for polygon, lineno in faces:
        resolved = []
        for idx in polygon:
            zero_based = idx - 1 if idx > 0 else count + idx
            if not 0 <= zero_based < count:
                raise ParseError(f"face index {idx} out of range ({count} vertices)", path, lineno)
            resolved.append(zero_based)
        triangles.extend(_fan(resolved))
    return vertices, triangles


def _parse_ply(lines: List[str], path: str):
    if not lines or lines[0].strip() != "ply":
        raise ParseError("missing 'ply' magic", path, 1)
    elements: List[Tuple[str, int, List[str]]] = []
    header_end = None
    for lineno, raw in enumerate(lines[1:], start=2):
        parts = raw.split()
        if not parts:
            continue
        if parts[0] == "format":
            if len(parts) < 2 or parts[1] != "ascii":
                raise ParseError("only ASCII PLY is supported", path, lineno)
        elif parts[0] == "element":
            try:
                elements.append((parts[1], int(parts[2]), []))
            except (IndexError, ValueError):
                raise ParseError("bad element line", path, lineno)
        elif parts[0] == "property":
            if not elements:
                raise ParseError("property before element", path, lineno)
            elements[-1][2].append(parts[-1] if parts[1] != "list" else "list:" + parts[-1])
        elif parts[0] == "end_header":
            header_end = lineno
            break
    if header_end is None:
        raise ParseError("missing end_header", path, len(lines))

    vertices: List[List[float]] = []
    triangles: List[Tuple[int, int, int]] = []
    body = [(i, l) for i, l in enumerate(lines[header_end:], start=header_end + 1) if l.strip()]
    cursor = 0
    vertex_count = 0
    for name, count, props in elements:
        rows = body[cursor:cursor + count]
        if len(rows) < count:
            raise ParseError(f"expected {count} '{name}' rows", path, len(lines))
        cursor += count
        if name == "vertex":
            try:
                ix, iy, iz = props.index("x"), props.index("y"), props.index("z")
            except ValueError:
                raise ParseError("vertex element needs x, y, z properties", path, header_end)
            for lineno, raw in rows:
                try:
                    values = [float(x) for x in raw.split()]
                    vertices.append([values[ix], values[iy], values[iz]])
                except (ValueError, IndexError):
                    raise ParseError("bad vertex row", path, lineno)
            vertex_count = len(vertices)
        elif name == "face":
            for lineno, raw in rows:
                try:
                    values = [int(x) for x in raw.split()]
                except ValueError:
                    raise ParseError("bad face row", path, lineno)
                if not values or values[0] < 3 or len(values) < values[0] + 1:
                    raise ParseError("face row needs a vertex count and >= 3 indices", path, lineno)
                polygon = values[1:values[0] + 1]
                for idx in polygon:
                    if not 0 <= idx < vertex_count:
                        raise ParseError(f"face index {idx} out of range ({vertex_count} vertices)", path, lineno)
                triangles.extend(_fan(polygon))
    return vertices, triangles


class SurfaceSamples(NamedTuple):
    points: np.ndarray
    normals: np.ndarray
    triangles: np.ndarray

    def __len__(self):
        return len(self.points)


def sample_surface(mesh: TriMesh, count: int, seed: int) -> SurfaceSamples:
    """
    Area-uniform surface samples drawn by trimesh.sample, deterministic in `seed`.
    Normals are the interpolated surface normals at the sampled points.
    """
    validate_count("count", count)
    points, tri = trimesh.sample.sample_surface(mesh.tm, count, seed=seed)
    tri = np.asarray(tri, dtype=np.int64)
    weights = trimesh.triangles.points_to_barycentric(mesh.triangle_vertices[tri], points)
    normals = mesh.interpolated_normals(tri, weights[:, 1], weights[:, 2])
    return SurfaceSamples(np.asarray(points, dtype=float), normals, tri)


@dataclass(frozen=True)
class MassProperties:
    volume: float
    center_of_mass: np.ndarray
    mass: float
    density: float


def mass_properties(mesh: TriMesh, density: float = MESH_DEFAULTS["density"]) -> MassProperties:
    """
    Volume, center of mass and mass of a closed mesh of uniform density.
    """
    validate_positive("density", density)
    if not mesh.is_watertight:
        raise NotWatertight(f"{mesh.name or 'mesh'} is not watertight; mass properties are undefined.")
    volume = float(mesh.tm.volume)
    if abs(volume) <= 1e-18:
        raise NotWatertight(f"{mesh.name or 'mesh'} encloses no volume.")
    com = np.array(mesh.tm.center_mass, dtype=float)
    volume = abs(volume)
    return MassProperties(volume=volume, center_of_mass=com, mass=volume * density, density=float(density))
