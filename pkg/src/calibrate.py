"""
calibrate.py

Fit the two free suction-model parameters (ring stiffness ratio and break threshold
ratio) to labeled seal attempts with Gaussian-process Bayesian optimization.
Includes:
    - SealAttemptRecord ingestion from measurement rows (contacts snapped to the mesh)
    - Verdict-accuracy objective with cached cup projections
    - bayes_optimize: Latin-hypercube design, GP surrogate, expected improvement
    - random_search baseline with the same budget
    - classification_report, tear-off force summary, synthetic ground-truth records

Author: GraspLab Team
"""

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize
from scipy.stats import norm, qmc
from sklearn.exceptions import ConvergenceWarning
from sklearn.gaussian_process import GaussianProcessRegressor
from sklearn.gaussian_process.kernels import RBF, ConstantKernel

from .config import CALIBRATION_DEFAULTS
from .errors import EmptyRecordSet, ValidationError
from .geometry import rotation_about_axis
from .mesh import TriMesh, load_mesh, sample_surface
from .raycast import Ray, raycast
from .suction import (CupProjection, SuctionCupParams, VacuumGraspCandidate, project_cups,
                      solve_equilibrium)
from .utils import get_logger, rng_for, validate_count, validate_non_negative, validate_positive

logger = get_logger(__name__)


class CalibrationParams(NamedTuple):
    ring_ratio: float
    break_fraction: float


@dataclass(frozen=True)
class SealAttemptRecord:
    mesh: TriMesh
    candidate: VacuumGraspCandidate
    observed_seal: bool
    tearoff: Optional[float] = None
    mesh_ref: str = ""
    row: Optional[int] = None


@dataclass(frozen=True)
class SearchBox:
    """
    Calibration search box in (k_r / k_e, eps_break / F_p). Both axes are searched on
    a log scale; the break axis is shifted by `break_offset` so that it can start at 0.
    """
    ring_ratio: Tuple[float, float] = CALIBRATION_DEFAULTS["ring_ratio_bounds"]
    break_fraction: Tuple[float, float] = CALIBRATION_DEFAULTS["break_fraction_bounds"]
    break_offset: float = CALIBRATION_DEFAULTS["break_fraction_offset"]

    def __post_init__(self):
        for name, (lo, hi) in (("ring_ratio", self.ring_ratio), ("break_fraction", self.break_fraction)):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValidationError(f"{name} bounds must be finite with lower < upper, got ({lo}, {hi}).")
        if self.ring_ratio[0] <= 0:
            raise ValidationError("ring_ratio bounds must be positive (log-scaled axis).")
        if self.break_fraction[0] < 0:
            raise ValidationError("break_fraction bounds must be >= 0.")
        validate_positive("break_offset", self.break_offset)

    def _break_axis(self) -> Tuple[float, float]:
        b0, b1 = self.break_fraction
        return math.log10(b0 + self.break_offset), math.log10(b1 + self.break_offset)

    def from_unit(self, u: Sequence[float]) -> CalibrationParams:
        lo, hi = np.log10(self.ring_ratio)
        ring = 10.0 ** (lo + float(u[0]) * (hi - lo))
        ring = min(max(ring, self.ring_ratio[0]), self.ring_ratio[1])
        c0, c1 = self._break_axis()
        brk = 10.0 ** (c0 + float(u[1]) * (c1 - c0)) - self.break_offset
        brk = min(max(brk, self.break_fraction[0]), self.break_fraction[1])
        return CalibrationParams(ring, brk)

    def to_unit(self, params: CalibrationParams) -> np.ndarray:
        lo, hi = np.log10(self.ring_ratio)
        c0, c1 = self._break_axis()
        return np.array([(math.log10(params.ring_ratio) - lo) / (hi - lo),
                         (math.log10(params.break_fraction + self.break_offset) - c0) / (c1 - c0)])

    def contains(self, params: CalibrationParams) -> bool:
        return (self.ring_ratio[0] <= params.ring_ratio <= self.ring_ratio[1]
                and self.break_fraction[0] <= params.break_fraction <= self.break_fraction[1])

    def to_dict(self) -> dict:
        return {"ring_ratio": list(self.ring_ratio), "break_fraction": list(self.break_fraction),
                "break_offset": self.break_offset}


@dataclass(frozen=True)
class CalibrationResult:
    best: CalibrationParams
    best_objective: float
    trace: Tuple[Tuple[CalibrationParams, float], ...]
    box: SearchBox = field(default_factory=SearchBox)

    def to_dict(self) -> dict:
        return {
            "best_params": self.best._asdict(),
            "best_objective": self.best_objective,
            "search_box": self.box.to_dict(),
            "trace": [{**p._asdict(), "objective": v} for p, v in self.trace],
        }


# ---------------------------------------------------------------- records

def snap_to_surface(mesh: TriMesh, contact: np.ndarray, approach: np.ndarray,
                    max_distance: float = CALIBRATION_DEFAULTS["snap_distance"]) -> Optional[np.ndarray]:
    """
    Surface point along the approach line within `max_distance` of `contact`, or None.
    """
    hit = raycast(mesh, Ray(contact - max_distance * approach, approach))
    if hit is None or hit.distance > 2.0 * max_distance:
        return None
    return hit.point


def records_from_measurements(rows, base_dir: Path = Path("."),
                              snap_distance: float = CALIBRATION_DEFAULTS["snap_distance"]) -> List[SealAttemptRecord]:
    """
    Turn measurement rows into records. Meshes are loaded once per path (relative to
    `base_dir`); rows whose contact is not within `snap_distance` of the surface are
    dropped with a warning.
    """
    meshes: Dict[str, TriMesh] = {}
    records = []
    for row in rows:
        if row.mesh not in meshes:
            meshes[row.mesh] = load_mesh(Path(base_dir) / row.mesh)
        mesh = meshes[row.mesh]
        snapped = snap_to_surface(mesh, row.contact, row.approach, snap_distance)
        if snapped is None:
            logger.warning("Row %d: contact is not within %.3g m of %s; dropped.", row.row, snap_distance, row.mesh)
            continue
        records.append(SealAttemptRecord(mesh, VacuumGraspCandidate(snapped, row.approach), row.label,
                                         row.tearoff, row.mesh, row.row))
    if not records:
        raise EmptyRecordSet("No usable seal attempt records.")
    return records


# ---------------------------------------------------------------- objective

class SealModelObjective:
    """
    Verdict accuracy of the seal model over a record set. Cup projections do not
    depend on the calibrated parameters and are computed once.
    """

    def __init__(self, records: Sequence[SealAttemptRecord], cup: SuctionCupParams = SuctionCupParams()):
        if not records:
            raise EmptyRecordSet("At least one seal attempt record is needed.")
        self.records = list(records)
        self.cup = cup
        self.labels = np.array([r.observed_seal for r in self.records], dtype=bool)
        self.projections: List[Optional[CupProjection]] = [None] * len(self.records)
        groups: Dict[int, List[int]] = {}
        for i, r in enumerate(self.records):
            groups.setdefault(id(r.mesh), []).append(i)
        for idx in groups.values():
            mesh = self.records[idx[0]].mesh
            for i, p in zip(idx, project_cups(mesh, cup, [self.records[i].candidate for i in idx])):
                self.projections[i] = p

    def verdicts(self, params: CalibrationParams) -> np.ndarray:
        cup = self.cup.with_calibration(*params)
        return np.array([solve_equilibrium(p, cup).success for p in self.projections], dtype=bool)

    def __call__(self, params: CalibrationParams) -> float:
        return float(np.mean(self.verdicts(params) == self.labels))


def objective(records: Sequence[SealAttemptRecord], params: CalibrationParams,
              cup: SuctionCupParams = SuctionCupParams()) -> float:
    """Fraction of records whose model verdict matches the observed label."""
    return SealModelObjective(records, cup)(CalibrationParams(*params))


# ---------------------------------------------------------------- optimizer

def expected_improvement(mu: np.ndarray, sigma: np.ndarray, best: float) -> np.ndarray:
    """Expected improvement over `best` for maximization."""
    improvement = mu - best
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, improvement / sigma, 0.0)
    ei = improvement * norm.cdf(z) + sigma * norm.pdf(z)
    return np.where(sigma > 0, ei, np.maximum(improvement, 0.0))


def _fit_surrogate(X: np.ndarray, y: np.ndarray, jitter: float, random_state: int) -> GaussianProcessRegressor:
    kernel = ConstantKernel(1.0, (1e-3, 1e3)) * RBF(length_scale=[0.3, 0.3], length_scale_bounds=(1e-2, 10.0))
    gp = GaussianProcessRegressor(kernel=kernel, alpha=jitter, normalize_y=True, n_restarts_optimizer=2,
                                  random_state=random_state)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        warnings.simplefilter("ignore", UserWarning)
        gp.fit(X, y)
    return gp


def _propose(gp: GaussianProcessRegressor, best: float, grid: np.ndarray, seen: np.ndarray,
             rng: np.random.Generator) -> np.ndarray:
    mu, sigma = gp.predict(grid, return_std=True)
    ei = expected_improvement(mu, sigma, best)
    start = grid[int(np.argmax(ei))]

    def negative_ei(x):
        m, s = gp.predict(x.reshape(1, -1), return_std=True)
        return -float(expected_improvement(m, s, best)[0])

    refined = optimize.minimize(negative_ei, start, method="L-BFGS-B", bounds=[(0.0, 1.0)] * 2)
    proposal = np.clip(refined.x, 0.0, 1.0) if refined.fun <= negative_ei(start) else start
    if np.min(np.linalg.norm(seen - proposal, axis=1)) < 1e-6:
        proposal = rng.random(2)
    return proposal


def bayes_maximize(fn: Callable[[CalibrationParams], float], box: SearchBox = SearchBox(),
                   budget: int = CALIBRATION_DEFAULTS["budget"], seed: int = 0,
                   initial_design: int = CALIBRATION_DEFAULTS["initial_design"],
                   grid_size: int = CALIBRATION_DEFAULTS["grid_size"],
                   jitter: float = CALIBRATION_DEFAULTS["gp_jitter"]) -> CalibrationResult:
    """
    Maximize `fn` over `box` with `budget` evaluations: a Latin hypercube of
    min(initial_design, budget) points, then one expected-improvement proposal per
    round from a GP fit on the whole trace.

    Returns:
        CalibrationResult with the best point seen (earliest on ties)
    """
    validate_count("budget", budget, minimum=10)
    validate_count("grid_size", grid_size, minimum=2)
    validate_non_negative("jitter", jitter)
    rng = rng_for(seed)
    n_init = min(initial_design, budget)
    X = list(qmc.LatinHypercube(d=2, seed=rng).random(n_init))
    y = [fn(box.from_unit(u)) for u in X]

    ticks = (np.arange(grid_size) + 0.5) / grid_size
    grid = np.array([(a, b) for a in ticks for b in ticks])
    while len(X) < budget:
        gp = _fit_surrogate(np.array(X), np.array(y), jitter, int(rng.integers(2 ** 31 - 1)))
        u = _propose(gp, max(y), grid, np.array(X), rng)
        X.append(u)
        y.append(fn(box.from_unit(u)))
        logger.debug("Round %d: objective %.4f (best %.4f).", len(X), y[-1], max(y))

    trace = tuple((box.from_unit(u), float(v)) for u, v in zip(X, y))
    best = int(np.argmax(y))
    logger.info("Calibration finished after %d evaluations: best objective %.4f.", budget, y[best])
    return CalibrationResult(trace[best][0], trace[best][1], trace, box)


def bayes_optimize(records: Sequence[SealAttemptRecord], box: SearchBox = SearchBox(),
                   budget: int = CALIBRATION_DEFAULTS["budget"], seed: int = 0,
                   cup: SuctionCupParams = SuctionCupParams(), **options) -> CalibrationResult:
    return bayes_maximize(SealModelObjective(records, cup), box, budget, seed, **options)


def random_search(fn: Callable[[CalibrationParams], float], box: SearchBox = SearchBox(),
                  budget: int = CALIBRATION_DEFAULTS["budget"], seed: int = 0) -> CalibrationResult:
    """Baseline: `budget` uniform draws in the unit box, best seen kept."""
    validate_count("budget", budget)
    rng = rng_for(seed, 2)
    trace = []
    for u in rng.random((budget, 2)):
        params = box.from_unit(u)
        trace.append((params, float(fn(params))))
    best = int(np.argmax([v for _, v in trace]))
    return CalibrationResult(trace[best][0], trace[best][1], tuple(trace), box)


# ---------------------------------------------------------------- reporting

@dataclass(frozen=True)
class ClassificationReport:
    true_positive: int
    false_positive: int
    true_negative: int
    false_negative: int

    @staticmethod
    def _ratio(a: int, b: int) -> Optional[float]:
        return a / b if b else None

    @property
    def ppv(self):
        return self._ratio(self.true_positive, self.true_positive + self.false_positive)

    @property
    def npv(self):
        return self._ratio(self.true_negative, self.true_negative + self.false_negative)

    @property
    def sensitivity(self):
        return self._ratio(self.true_positive, self.true_positive + self.false_negative)

    @property
    def specificity(self):
        return self._ratio(self.true_negative, self.true_negative + self.false_positive)

    @property
    def accuracy(self):
        total = self.true_positive + self.false_positive + self.true_negative + self.false_negative
        return self._ratio(self.true_positive + self.true_negative, total)

    def to_dict(self) -> dict:
        return {"tp": self.true_positive, "fp": self.false_positive, "tn": self.true_negative,
                "fn": self.false_negative, "ppv": self.ppv, "npv": self.npv, "sensitivity": self.sensitivity,
                "specificity": self.specificity, "accuracy": self.accuracy}


def classification_report(records: Sequence[SealAttemptRecord], params: CalibrationParams,
                          cup: SuctionCupParams = SuctionCupParams()) -> ClassificationReport:
    model = SealModelObjective(records, cup)
    predicted = model.verdicts(CalibrationParams(*params))
    observed = model.labels
    return ClassificationReport(int(np.sum(predicted & observed)), int(np.sum(predicted & ~observed)),
                                int(np.sum(~predicted & ~observed)), int(np.sum(~predicted & observed)))


def tearoff_summary(records: Sequence[SealAttemptRecord]) -> dict:
    """Measured tear-off forces of sealed attempts (reported only, never fitted)."""
    forces = [r.tearoff for r in records if r.observed_seal and r.tearoff is not None]
    return {"count": len(forces), "mean": float(np.mean(forces)) if forces else None,
            "min": float(np.min(forces)) if forces else None, "max": float(np.max(forces)) if forces else None}


def generate_synthetic_records(meshes: Sequence[TriMesh], truth: CalibrationParams, count: int, seed: int,
                               cup: SuctionCupParams = SuctionCupParams(), noise: float = 0.0,
                               max_tilt_deg: float = 40.0) -> List[SealAttemptRecord]:
    """
    Records labeled by the model itself at `truth`. Contacts are area-uniform over the
    meshes (round-robin); approach directions are the anti-normal tilted by up to
    `max_tilt_deg`. Exactly round(noise * count) labels are flipped.
    """
    validate_count("count", count)
    if not 0.0 <= noise <= 1.0:
        raise ValidationError(f"noise must lie in [0, 1], got {noise}.")
    rng = rng_for(seed, 1)
    per_mesh = [count // len(meshes) + (1 if i < count % len(meshes) else 0) for i in range(len(meshes))]
    candidates: List[Tuple[TriMesh, VacuumGraspCandidate]] = []
    for k, (mesh, n) in enumerate(zip(meshes, per_mesh)):
        if n == 0:
            continue
        samples = sample_surface(mesh, n, int(rng.integers(2 ** 31 - 1)))
        for p, normal in zip(samples.points, samples.normals):
            axis = np.cross(normal, rng.standard_normal(3))
            tilt = math.radians(max_tilt_deg) * rng.random()
            approach = rotation_about_axis(axis, tilt) @ (-normal)
            candidates.append((mesh, VacuumGraspCandidate(p, approach / np.linalg.norm(approach))))

    unlabeled = [SealAttemptRecord(m, c, False) for m, c in candidates]
    labels = SealModelObjective(unlabeled, cup).verdicts(CalibrationParams(*truth))
    flips = rng.permutation(len(labels))[:int(round(noise * len(labels)))]
    labels[flips] = ~labels[flips]
    return [SealAttemptRecord(m, c, bool(l), mesh_ref=m.name) for (m, c), l in zip(candidates, labels)]
