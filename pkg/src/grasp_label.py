"""
grasp_label.py

GraspLabel: the gripper-agnostic record written to grasp label files and consumed by
scene filtering. Parallel-jaw and vacuum results are converted here.

Author: GraspLab Team
"""

from dataclasses import dataclass, replace
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import SchemaError
from .geometry import RigidTransform, frame_from_z
from .mesh import MassProperties
from .pj_sampler import PjGraspCandidate
from .suction import SealEvaluation, SuctionCupParams, VacuumGraspCandidate
from .wrench import DEFAULT_GRAVITY, contact_frame, vacuum_wrench_score

PARALLEL_JAW = "parallel_jaw"
VACUUM = "vacuum"

PJ_SCORE_KEYS = ("antip", "pj_anal", "pj_soft", "pj_sim")
VACUUM_SCORE_KEYS = ("sc_seal", "sc_sim")


@dataclass(frozen=True)
class GraspLabel:
    gripper: str
    pose: RigidTransform
    contacts: Tuple[np.ndarray, ...]
    scores: Dict[str, Optional[float]]
    collision_free: bool = True
    width: Optional[float] = None
    seal: Optional[dict] = None

    @property
    def approach(self) -> np.ndarray:
        return self.pose.rotation[:, 2]

    @property
    def closing_direction(self) -> np.ndarray:
        return self.pose.rotation[:, 0]

    @property
    def contact_a(self) -> np.ndarray:
        return self.contacts[0]

    @property
    def contact_b(self) -> np.ndarray:
        return self.contacts[-1]

    def transformed(self, transform: RigidTransform) -> "GraspLabel":
        return replace(self, pose=transform.compose(self.pose),
                       contacts=tuple(transform.apply(c) for c in self.contacts))

    def with_scores(self, **scores) -> "GraspLabel":
        return replace(self, scores={**self.scores, **scores})

    def to_dict(self) -> dict:
        out = {
            "gripper": self.gripper,
            "pose": self.pose.to_list(),
            "contacts": [[float(x) for x in c] for c in self.contacts],
            "scores": {k: (None if v is None else float(v)) for k, v in self.scores.items()},
            "collision_free": bool(self.collision_free),
        }
        if self.width is not None:
            out["width"] = float(self.width)
        if self.seal is not None:
            out["seal"] = self.seal
        return out

    @classmethod
    def from_dict(cls, data: dict, pointer: str = "") -> "GraspLabel":
        if not isinstance(data, dict):
            raise SchemaError("grasp entry must be an object", pointer)
        gripper = data.get("gripper")
        if gripper not in (PARALLEL_JAW, VACUUM):
            raise SchemaError(f"unknown gripper {gripper!r}", f"{pointer}/gripper")
        try:
            pose = RigidTransform.from_matrix(data["pose"])
            contacts = tuple(np.asarray(c, dtype=float).reshape(3) for c in data["contacts"])
        except KeyError as exc:
            raise SchemaError(f"missing key {exc.args[0]!r}", f"{pointer}/{exc.args[0]}") from exc
        except (TypeError, ValueError) as exc:
            raise SchemaError(str(exc), f"{pointer}/pose") from exc
        keys = PJ_SCORE_KEYS if gripper == PARALLEL_JAW else VACUUM_SCORE_KEYS
        raw = data.get("scores", {})
        if not isinstance(raw, dict):
            raise SchemaError("scores must be an object", f"{pointer}/scores")
        scores = {}
        for k in keys:
            value = raw.get(k)
            if value is not None and (isinstance(value, bool) or not isinstance(value, (int, float))):
                raise SchemaError("score must be a number or null", f"{pointer}/scores/{k}")
            scores[k] = value
        return cls(gripper, pose, contacts, scores, bool(data.get("collision_free", True)),
                   data.get("width"), data.get("seal"))


def label_from_pj(grasp: PjGraspCandidate) -> GraspLabel:
    scores = {"antip": grasp.s_antip, "pj_anal": grasp.s_pj_anal, "pj_soft": grasp.s_pj_soft, "pj_sim": None}
    return GraspLabel(PARALLEL_JAW, grasp.pose, (grasp.contact_a, grasp.contact_b), scores,
                      grasp.collision_free, grasp.width)


def vacuum_sim_score(contact: np.ndarray, approach: np.ndarray, params: SuctionCupParams,
                     props: Optional[MassProperties], gravity=DEFAULT_GRAVITY) -> Optional[float]:
    if props is None:
        return None
    return vacuum_wrench_score(contact, contact_frame(contact, approach), props.center_of_mass, props.mass, params, gravity).score


def label_from_vacuum(candidate: VacuumGraspCandidate, evaluation: SealEvaluation, params: SuctionCupParams,
                      props: Optional[MassProperties] = None) -> GraspLabel:
    """
    Vacuum label with s_sc_seal = 1 for a sealed grasp and s_sc_sim from the gravity
    wrench when mass properties are known (only sealed grasps get a wrench score).
    """
    sealed = bool(evaluation.success)
    if sealed:
        sim = vacuum_sim_score(candidate.contact, candidate.approach, params, props)
    else:
        sim = None if props is None else 0.0
    scores = {"sc_seal": 1.0 if sealed else 0.0, "sc_sim": sim}
    pose = frame_from_z(candidate.contact, candidate.approach)
    return GraspLabel(VACUUM, pose, (candidate.contact,), scores, True, None, evaluation.summary())
