"""
Shared fixtures for the GraspLab test suite.

Author: GraspLab Team
"""

import json

import numpy as np
import pytest

from src.geometry import RigidTransform, look_at
from src.primitives import box
from src.scene import Camera, Scene, SceneObject

CUBE_OBJ = """# unit cube, 0.1 m
v -0.05 -0.05 -0.05
v 0.05 -0.05 -0.05
v 0.05 0.05 -0.05
v -0.05 0.05 -0.05
v -0.05 -0.05 0.05
v 0.05 -0.05 0.05
v 0.05 0.05 0.05
v -0.05 0.05 0.05
f 1 4 3 2
f 5 6 7 8
f 1 2 6 5
f 2 3 7 6
f 3 4 8 7
f 4 1 5 8
"""


def write_obj(path, mesh):
    lines = ["v " + " ".join(repr(float(c)) for c in vertex) for vertex in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles]
    path.write_text("\n".join(lines) + "\n")
    return path


def top_down_camera(width=64, height=64, fov_px=80.0, height_m=1.0, target=(0.0, 0.0, 0.0)):
    """Camera looking straight down on `target` from `height_m` above it."""
    target = np.asarray(target, dtype=float)
    pose = look_at(target + [0.0, 0.0, height_m], target, up=[0.0, 1.0, 0.0])
    return Camera(width, height, fov_px, fov_px, (width - 1) / 2.0, (height - 1) / 2.0, pose)


@pytest.fixture
def cube():
    return box((0.1, 0.1, 0.1), name="cube")


@pytest.fixture
def cube_obj(tmp_path):
    path = tmp_path / "cube.obj"
    path.write_text(CUBE_OBJ)
    return path


@pytest.fixture
def camera():
    return top_down_camera()


@pytest.fixture
def stacked_scene_files(tmp_path):
    """
    Scene and camera JSON for two boxes: a small box (id 2) resting on a large one (id 1).
    """
    write_obj(tmp_path / "large.obj", box((0.2, 0.2, 0.05)))
    write_obj(tmp_path / "small.obj", box((0.05, 0.05, 0.05)))
    scene = {
        "objects": [
            {"instance_id": 1, "class_id": 1, "mesh": "large.obj",
             "pose": RigidTransform.from_translation([0.0, 0.0, 0.025]).to_list(),
             "keypoints": [[0.0, 0.0, 0.025]]},
            {"instance_id": 2, "class_id": 2, "mesh": "small.obj",
             "pose": RigidTransform.from_translation([0.0, 0.0, 0.075]).to_list()},
        ],
        "tote": None,
        "gravity": [0.0, 0.0, -9.81],
    }
    cam = top_down_camera()
    camera_doc = {"width": cam.width, "height": cam.height, "fx": cam.fx, "fy": cam.fy,
                  "cx": cam.cx, "cy": cam.cy, "pose": cam.pose.to_list()}
    scene_path = tmp_path / "scene.json"
    camera_path = tmp_path / "camera.json"
    scene_path.write_text(json.dumps(scene))
    camera_path.write_text(json.dumps(camera_doc))
    return scene_path, camera_path


def posed(instance_id, class_id, mesh, translation, keypoints=None):
    return SceneObject(instance_id, class_id, mesh, RigidTransform.from_translation(translation), keypoints=keypoints)


@pytest.fixture
def stacked_scene():
    """A 5 cm box (id 2) resting on a 20 x 20 x 5 cm box (id 1) on the floor."""
    return Scene((
        posed(1, 1, box((0.2, 0.2, 0.05)), [0.0, 0.0, 0.025], keypoints=[[0.0, 0.0, 0.025], [0.09, 0.09, 0.025]]),
        posed(2, 2, box((0.05, 0.05, 0.05)), [0.0, 0.0, 0.075]),
    ))
