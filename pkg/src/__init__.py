"""
GraspLab

A modular package for generating grasp labels and bin-picking scene annotations.
It supports parallel-jaw and suction grippers on triangle meshes, with a
mass-spring seal model whose stiffness ratios can be calibrated against
measured seal attempts.

Organized modules:
- mesh, primitives, raycast, bvh: Triangle meshes, test solids and ray queries
- suction: Suction cup rim projection and seal evaluation
- pj_sampler: Robust antipodal parallel-jaw grasp sampling
- wrench: Gravity wrench resistance scores
- grasp_label: Unified grasp label records
- scene, scene_labels: Bin scenes, rendered instance maps, occlusion and difficulty
- calibrate: Bayesian calibration of the seal model
- serialization: JSON, PGM/PFM and CSV formats
- visualization: Debug figures
- cli: Command-line front-end (python -m src)

Usage Example:
--------------
from src.primitives import box
from src.suction import SuctionCupParams, VacuumGraspCandidate, evaluate_seal

mesh = box((0.1, 0.1, 0.1))
evaluation = evaluate_seal(mesh, SuctionCupParams(), VacuumGraspCandidate([0, 0, 0.05], [0, 0, -1]))
print(evaluation.success)
"""

from .config import APP_TITLE, SUCTION_DEFAULTS
from .mesh import TriMesh, load_mesh, mass_properties, sample_surface
from .suction import SuctionCupParams, VacuumGraspCandidate, evaluate_seal, sample_vacuum_candidates
from .pj_sampler import GripperGeometry, PjSamplerConfig, sample_pj_grasps
from .grasp_label import GraspLabel
from .scene import Camera, Scene, SceneObject, filter_grasps_in_scene, sample_test_scene
from .scene_labels import difficulty, layer_graph, relation_matrix, render_maps
from .calibrate import CalibrationParams, bayes_optimize

__all__ = [
    "APP_TITLE",
    "SUCTION_DEFAULTS",
    "TriMesh",
    "load_mesh",
    "mass_properties",
    "sample_surface",
    "SuctionCupParams",
    "VacuumGraspCandidate",
    "evaluate_seal",
    "sample_vacuum_candidates",
    "GripperGeometry",
    "PjSamplerConfig",
    "sample_pj_grasps",
    "GraspLabel",
    "Camera",
    "Scene",
    "SceneObject",
    "filter_grasps_in_scene",
    "sample_test_scene",
    "difficulty",
    "layer_graph",
    "relation_matrix",
    "render_maps",
    "CalibrationParams",
    "bayes_optimize",
]
