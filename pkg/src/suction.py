"""
suction.py

Quasi-static vacuum seal model for GraspLab.
Includes:
    - Suction-cup parameters with the two calibratable ratios (ring stiffness and break threshold)
    - Ring of spring-connected mass points projected onto the mesh along the approach direction
    - Force equilibrium of elastic, ring and contact forces per mass point
    - Seal verdict from the contact-force component along the local surface normal
    - Area-uniform vacuum grasp candidate sampling

The model never simulates the cup over time: the rim is projected once and the
equilibrium is solved in closed form.

Author: GraspLab Team
"""

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import SUCTION_DEFAULTS
from .errors import NonPositiveStiffness, ParseError, ValidationError
from .geometry import RigidTransform, orthonormal_frame
from .mesh import TriMesh, sample_surface
from .raycast import raycast_batch
from .utils import (as_unit_vector, as_vector, get_logger, validate_count, validate_keys,
                    validate_non_negative, validate_positive)

logger = get_logger(__name__)


class FailureReason(str, Enum):
    NONE = "none"
    RAY_MISS = "ray_miss"
    DEPTH_EXCEEDED = "depth_exceeded"
    FORCE_LIFTOFF = "force_liftoff"


@dataclass(frozen=True)
class SuctionCupParams:
    """
    Suction cup model parameters (SI units).

    ring_ratio is k_r / k_e and break_fraction is eps_break / F_p; these are the
    two calibrated parameters. The elastic stiffness defaults to the value that
    compresses the cup by `nominal_compression` radii on a flat surface.
    """
    radius: float = SUCTION_DEFAULTS["radius"]
    mass_point_count: int = SUCTION_DEFAULTS["mass_point_count"]
    pressure_difference: float = SUCTION_DEFAULTS["pressure_difference"]
    ring_ratio: float = SUCTION_DEFAULTS["ring_ratio"]
    break_fraction: float = SUCTION_DEFAULTS["break_fraction"]
    depth_factor: float = SUCTION_DEFAULTS["depth_factor"]
    nominal_compression: float = SUCTION_DEFAULTS["nominal_compression"]
    cup_friction: float = SUCTION_DEFAULTS["cup_friction"]
    flat_normals: bool = SUCTION_DEFAULTS["flat_normals"]

    def __post_init__(self):
        validate_positive("radius", self.radius)
        validate_count("mass_point_count", self.mass_point_count, minimum=8)
        if self.mass_point_count % 2:
            raise ValidationError(f"mass_point_count must be even, got {self.mass_point_count}.")
        validate_positive("pressure_difference", self.pressure_difference)
        validate_non_negative("break_fraction", self.break_fraction, allow_inf=True)
        validate_positive("depth_factor", self.depth_factor)
        validate_non_negative("cup_friction", self.cup_friction)
        _check_stiffness("ring_ratio", self.ring_ratio)
        _check_stiffness("nominal_compression", self.nominal_compression)

    @property
    def vacuum_force(self) -> float:
        """F_p = dp * pi * r^2 (N)."""
        return self.pressure_difference * math.pi * self.radius ** 2

    @property
    def elastic_stiffness(self) -> float:
        return self.vacuum_force / (self.mass_point_count * self.nominal_compression * self.radius)

    @property
    def ring_stiffness(self) -> float:
        return self.ring_ratio * self.elastic_stiffness

    @property
    def break_threshold(self) -> float:
        return self.break_fraction * self.vacuum_force

    @property
    def max_projection_depth(self) -> float:
        return self.depth_factor * self.radius

    @property
    def ring_rest_length(self) -> float:
        return 2.0 * self.radius * math.sin(math.pi / self.mass_point_count)

    def with_calibration(self, ring_ratio: float, break_fraction: float) -> "SuctionCupParams":
        return replace(self, ring_ratio=float(ring_ratio), break_fraction=float(break_fraction))

    @classmethod
    def from_dict(cls, data: dict) -> "SuctionCupParams":
        """
        Build parameters from ratio fields, SI fields or a mix of both. An SI field
        and its ratio counterpart may not be given together.
        """
        validate_keys("cup parameter", data, CUP_KEYS)
        values = {k: v for k, v in data.items() if k not in SI_FIELDS}
        for si, ratio in SI_FIELDS.items():
            if si in data and ratio in data:
                raise ValidationError(f"Give either {si} or {ratio}, not both.")
        base = cls(**values)
        k_e = base.elastic_stiffness
        if "elastic_stiffness" in data:
            _check_stiffness("elastic_stiffness", data["elastic_stiffness"])
            k_e = float(data["elastic_stiffness"])
            values["nominal_compression"] = base.vacuum_force / (base.mass_point_count * k_e * base.radius)
        if "ring_stiffness" in data:
            _check_stiffness("ring_stiffness", data["ring_stiffness"])
            values["ring_ratio"] = float(data["ring_stiffness"]) / k_e
        if "break_threshold" in data:
            validate_non_negative("break_threshold", data["break_threshold"], allow_inf=True)
            values["break_fraction"] = float(data["break_threshold"]) / base.vacuum_force
        if "max_projection_depth" in data:
            validate_positive("max_projection_depth", data["max_projection_depth"])
            values["depth_factor"] = float(data["max_projection_depth"]) / base.radius
        return cls(**values)

    def to_dict(self) -> dict:
        """SI parameter document; from_dict reads it back."""
        return {
            "radius": self.radius,
            "mass_point_count": self.mass_point_count,
            "pressure_difference": self.pressure_difference,
            "elastic_stiffness": self.elastic_stiffness,
            "ring_stiffness": self.ring_stiffness,
            "break_threshold": self.break_threshold,
            "max_projection_depth": self.max_projection_depth,
            "cup_friction": self.cup_friction,
            "flat_normals": self.flat_normals,
        }


# SI field -> ratio field it replaces
SI_FIELDS = {
    "elastic_stiffness": "nominal_compression",
    "ring_stiffness": "ring_ratio",
    "break_threshold": "break_fraction",
    "max_projection_depth": "depth_factor",
}
CUP_KEYS = [f.name for f in fields(SuctionCupParams)] + list(SI_FIELDS)


def _check_stiffness(name: str, value: float):
    if (isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating))
            or not math.isfinite(value) or value <= 0):
        raise NonPositiveStiffness(f"{name} must be a positive finite stiffness, got {value!r}.")


def load_cup_params(path: Union[str, Path]) -> SuctionCupParams:
    """
    Read a cup parameter JSON object (see SuctionCupParams.from_dict). Unknown keys
    are rejected.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", str(path), exc.lineno) from exc
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: cup parameters must be a JSON object.")
    return SuctionCupParams.from_dict(data)


@dataclass(frozen=True)
class VacuumGraspCandidate:
    """Contact point and approach direction v (pointing from the cup toward the surface)."""
    contact: np.ndarray
    approach: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "contact", as_vector("contact", self.contact))
        object.__setattr__(self, "approach", as_unit_vector("approach", self.approach))

    def transformed(self, transform: RigidTransform) -> "VacuumGraspCandidate":
        return VacuumGraspCandidate(transform.apply(self.contact), transform.apply_vector(self.approach))


@dataclass(frozen=True)
class CupProjection:
    """
    Rim mass points projected onto the mesh. On a ray miss the projected arrays hold
    NaN for the missing points.
    """
    rest_positions: np.ndarray
    projected_positions: np.ndarray
    normals: np.ndarray
    hit_distances: np.ndarray
    lengths: np.ndarray
    approach: np.ndarray
    failure_reason: FailureReason = FailureReason.NONE

    @property
    def ok(self) -> bool:
        return self.failure_reason == FailureReason.NONE


@dataclass(frozen=True)
class SealEvaluation:
    success: bool
    failure_reason: FailureReason
    rest_positions: np.ndarray
    projected_positions: np.ndarray
    normals: np.ndarray
    lengths: np.ndarray
    elastic_forces: np.ndarray
    ring_forces: np.ndarray
    contact_forces: np.ndarray
    normal_component_residual: np.ndarray
    max_compression: float
    vacuum_force: float
    liftoff_indices: Tuple[int, ...] = field(default_factory=tuple)

    @property
    def equilibrium_residual(self) -> float:
        """|sum f_r + sum f_p + sum f_e| (N); NaN when no forces were solved."""
        total = self.ring_forces.sum(axis=0) + self.contact_forces.sum(axis=0) + self.elastic_forces.sum(axis=0)
        return float(np.linalg.norm(total))

    def summary(self) -> dict:
        return {
            "success": bool(self.success),
            "failure_reason": self.failure_reason.value,
            "max_compression": None if math.isnan(self.max_compression) else float(self.max_compression),
            "vacuum_force": float(self.vacuum_force),
            "liftoff_indices": [int(i) for i in self.liftoff_indices],
        }


def build_cup_rim(params: SuctionCupParams, candidate: VacuumGraspCandidate) -> np.ndarray:
    """
    Rest positions (n, 3) of the rim mass points: a circle of radius r in the plane
    perpendicular to v, centred on the approach axis at `max_projection_depth`
    before the contact.
    """
    v = candidate.approach
    x, y = orthonormal_frame(v)
    phi = 2.0 * np.pi * np.arange(params.mass_point_count) / params.mass_point_count
    center = candidate.contact - params.max_projection_depth * v
    return center + params.radius * (np.outer(np.cos(phi), x) + np.outer(np.sin(phi), y))


def _projection_from_hits(rest: np.ndarray, approach: np.ndarray, points: np.ndarray, normals: np.ndarray,
                          distances: np.ndarray, hit: np.ndarray, max_depth: float) -> CupProjection:
    if not np.all(hit):
        reason = FailureReason.RAY_MISS
        lengths = np.full(len(rest), np.nan)
    else:
        lengths = distances - distances.min()
        reason = FailureReason.DEPTH_EXCEEDED if np.any(lengths > max_depth) else FailureReason.NONE
    return CupProjection(rest, points, normals, np.where(hit, distances, np.nan), lengths, approach, reason)


def project_cup(mesh: TriMesh, params: SuctionCupParams, candidate: VacuumGraspCandidate) -> CupProjection:
    """
    Cast every rim point along v onto the mesh. l_i is the hit distance relative to
    the closest hit, so min l_i = 0.
    """
    return project_cups(mesh, params, [candidate])[0]


def project_cups(mesh: TriMesh, params: SuctionCupParams,
                 candidates: Sequence[VacuumGraspCandidate]) -> List[CupProjection]:
    """Batched project_cup: all rims are cast in one BVH traversal."""
    if not candidates:
        return []
    n = params.mass_point_count
    rims = np.stack([build_cup_rim(params, c) for c in candidates])
    dirs = np.repeat(np.stack([c.approach for c in candidates]), n, axis=0)
    hits = raycast_batch(mesh, rims.reshape(-1, 3), dirs, flat_normals=params.flat_normals)
    out = []
    for k, c in enumerate(candidates):
        s = slice(k * n, (k + 1) * n)
        out.append(_projection_from_hits(rims[k], c.approach, hits.points[s], hits.normals[s],
                                         hits.distances[s], hits.hit[s], params.max_projection_depth))
    return out


def equilibrium_forces(positions: np.ndarray, lengths: np.ndarray, approach: np.ndarray, vacuum_force: float,
                       elastic_stiffness: float, ring_stiffness: float, rest_length: float):
    """
    Closed-form static equilibrium of the spring ring.

    Returns:
        max_compression, elastic_forces (n, 3), ring_forces (n, 3), contact_forces (n, 3)
    """
    _check_stiffness("elastic_stiffness", elastic_stiffness)
    _check_stiffness("ring_stiffness", ring_stiffness)
    lengths = np.asarray(lengths, dtype=float)
    n = len(lengths)
    max_compression = (vacuum_force / elastic_stiffness + lengths.sum()) / n
    elastic = np.outer(elastic_stiffness * (max_compression - lengths), approach)

    ring = np.zeros((n, 3))
    for step in (-1, 1):
        delta = np.roll(positions, -step, axis=0) - positions
        dist = np.linalg.norm(delta, axis=1, keepdims=True)
        unit = np.divide(delta, dist, out=np.zeros_like(delta), where=dist > 0)
        ring += ring_stiffness * (dist - rest_length) * unit
    contact = -(ring + elastic)
    return max_compression, elastic, ring, contact


def _failed_evaluation(projection: CupProjection, params: SuctionCupParams) -> SealEvaluation:
    n = len(projection.rest_positions)
    nan3 = np.full((n, 3), np.nan)
    return SealEvaluation(
        success=False, failure_reason=projection.failure_reason,
        rest_positions=projection.rest_positions, projected_positions=projection.projected_positions,
        normals=projection.normals, lengths=projection.lengths,
        elastic_forces=nan3, ring_forces=nan3, contact_forces=nan3,
        normal_component_residual=np.full(n, np.nan), max_compression=float("nan"),
        vacuum_force=params.vacuum_force,
    )


def solve_equilibrium(projection: CupProjection, params: SuctionCupParams) -> SealEvaluation:
    """
    Solve the force equilibrium on a projected rim and apply the liftoff rule.

    A failed projection is passed through as an unsuccessful evaluation without forces.
    """
    if not projection.ok:
        return _failed_evaluation(projection, params)
    max_compression, elastic, ring, contact = equilibrium_forces(
        projection.projected_positions, projection.lengths, projection.approach, params.vacuum_force,
        params.elastic_stiffness, params.ring_stiffness, params.ring_rest_length)
    # spring force acting on the mass point, along the outward normal
    lift = np.einsum("ij,ij->i", ring + elastic, projection.normals)
    offending = tuple(int(i) for i in np.flatnonzero(lift > params.break_threshold))
    reason = FailureReason.FORCE_LIFTOFF if offending else FailureReason.NONE
    return SealEvaluation(
        success=not offending, failure_reason=reason,
        rest_positions=projection.rest_positions, projected_positions=projection.projected_positions,
        normals=projection.normals, lengths=projection.lengths,
        elastic_forces=elastic, ring_forces=ring, contact_forces=contact,
        normal_component_residual=lift, max_compression=float(max_compression),
        vacuum_force=params.vacuum_force, liftoff_indices=offending,
    )


def check_seal(evaluation: SealEvaluation, params: SuctionCupParams,
               projection: Optional[CupProjection] = None) -> bool:
    """
    True iff every mass point keeps its spring force along the outward normal at or
    below the break threshold.

    The evaluation already carries the projected normals; pass `projection` to test
    the solved forces against another projection of the same rim (e.g. with flat
    normals).
    """
    if projection is not None and not projection.ok:
        return False
    if evaluation.failure_reason in (FailureReason.RAY_MISS, FailureReason.DEPTH_EXCEEDED):
        return False
    if projection is None:
        lift = evaluation.normal_component_residual
    else:
        lift = np.einsum("ij,ij->i", evaluation.ring_forces + evaluation.elastic_forces, projection.normals)
    return bool(np.all(lift <= params.break_threshold))


def evaluate_seal(mesh: TriMesh, params: SuctionCupParams, candidate: VacuumGraspCandidate) -> SealEvaluation:
    return solve_equilibrium(project_cup(mesh, params, candidate), params)


def sample_vacuum_candidates(mesh: TriMesh, params: SuctionCupParams, count: int, seed: int
                             ) -> List[Tuple[VacuumGraspCandidate, SealEvaluation]]:
    """
    Area-uniform contacts with v = -normal, each evaluated with the seal model.
    """
    validate_count("count", count)
    samples = sample_surface(mesh, count, seed)
    candidates = [VacuumGraspCandidate(p, -n) for p, n in zip(samples.points, samples.normals)]
    projections = project_cups(mesh, params, candidates)
    results = [(c, solve_equilibrium(p, params)) for c, p in zip(candidates, projections)]
    sealed = sum(1 for _, e in results if e.success)
    logger.info("Evaluated %d vacuum candidates on %s: %d sealed.", count, mesh.name or "mesh", sealed)
    return results
