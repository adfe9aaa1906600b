"""
config.py

Default configuration and constants for GraspLab.
Modify these values to change the default model parameters or app-wide settings.
Every parameter dataclass in the package reads its defaults from here.

Author: GraspLab Team
"""

MESH_DEFAULTS = {
    "density": 1000.0,          # kg/m^3, uniform density for mass properties
    "crease_angle_deg": 30.0,   # normals are only smoothed across flatter edges
    "det_epsilon": 1e-9,        # ray/triangle determinant cut-off
    "min_hit_distance": 1e-7,   # self-intersection guard (m)
    "bvh_leaf_size": 8,
}

SUCTION_DEFAULTS = {
    "radius": 0.01,               # m
    "mass_point_count": 32,
    "pressure_difference": 70_000.0,   # Pa
    "ring_ratio": 1.0,            # k_r / k_e
    "break_fraction": 0.0,        # eps_break / F_p
    "depth_factor": 1.5,          # max_projection_depth = depth_factor * r
    "nominal_compression": 0.3,   # flat-surface spring compression, in cup radii
    "cup_friction": 0.5,          # torsional friction coefficient of the cup lip
    "flat_normals": False,
}

GRIPPER_DEFAULTS = {
    "finger_width": 0.02,    # m, along the grasp y axis
    "finger_depth": 0.01,    # m, along the closing direction
    "finger_height": 0.045,  # m, along the approach
    "max_width": 0.08,       # m
    "palm_width": 0.06,      # m, along y
    "palm_depth": 0.03,      # m, along the approach
    "friction": 0.4,
    "clearance": 0.001,      # m, gap between finger pads and contacts
}

PJ_SAMPLER_DEFAULTS = {
    "max_grasps": 5000,
    "contact_samples": 500,
    "attempts": 5,              # N robust antipodal attempts
    "rotations": 12,            # L poses around the closing axis
    "angle_jitter_deg": 8.0,
    "translation_jitter": 0.002,  # m
}

WRENCH_DEFAULTS = {
    "gravity": 9.81,             # m/s^2
    "squeeze_force": 40.0,       # N
    "torsion_coefficient": 0.005,  # m, soft-finger gamma
}

SCENE_DEFAULTS = {
    "resolution": 1024,
    "near": 0.01,
    "far": 10.0,
    "min_component_pixels": 4,
    "visibility_tolerance": 0.001,  # m
    "approach_distance": 0.3,       # m, straight-line approach length
    "approach_step": 0.005,         # m
    "cup_height": 0.03,             # m, swept vacuum tool length
    "heatmap_sigma": 8.0,           # px
    "max_placement_retries": 50,
    "level1_layer_limit": 2,
    "level1_occlusion_limit": 0.05,
}

CALIBRATION_DEFAULTS = {
    "budget": 60,
    "initial_design": 10,
    "ring_ratio_bounds": (0.01, 100.0),
    "break_fraction_bounds": (0.0, 0.5),
    "break_fraction_offset": 1e-4,  # shift of the log-scaled break axis
    "gp_jitter": 1e-6,
    "grid_size": 64,
    "snap_distance": 0.005,  # m
}

APP_TITLE = "GraspLab"
APP_DESCRIPTION = (
    "GraspLab synthesizes vacuum and parallel-jaw grasp labels on triangle meshes and "
    "annotates bin-picking scenes with amodal masks, occlusion relations, layers and "
    "difficulty levels."
)
