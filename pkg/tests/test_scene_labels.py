"""
Unit tests for src.scene_labels in GraspLab.
Covers:
- Instance ID, depth and amodal rendering with a top-down camera
- Occlusion scores, relation matrices and manipulation layers
- Difficulty levels and the features measured from rendered maps
- Keypoint projection and center-of-mass heat maps

Author: GraspLab Team
"""

from dataclasses import replace

import numpy as np
import pytest

from src.errors import NotWatertight
from src.mesh import TriMesh
from src.primitives import box, tote
from src.scene import Scene
from src.scene_labels import (DifficultyFeatures, InstanceMaps, Layer, com_heatmap, difficulty, layer_graph,
                              measure_difficulty_features, project_keypoints, relation_matrix, render_maps,
                              visible_components)

from .conftest import posed


def test_stacked_boxes_render(stacked_scene, camera):
    maps = render_maps(stacked_scene, camera)
    assert maps.instance_ids == (1, 2)
    assert maps.id_image.shape == (64, 64)
    assert maps.total_pixels().tolist() == [256, 16]
    assert maps.visible_pixels().tolist() == [240, 16]
    assert maps.occlusion_scores() == pytest.approx([0.0625, 0.0])
    # small box top spans pixels 30..33, large box 24..39
    assert np.array_equal(np.argwhere(maps.visible_mask(1)).min(axis=0), [30, 30])
    assert np.array_equal(np.argwhere(maps.visible_mask(1)).max(axis=0), [33, 33])
    assert np.array_equal(maps.occluded_mask(0), maps.visible_mask(1))
    assert maps.id_image[31, 31] == 2
    assert maps.depth[31, 31] == pytest.approx(0.9, rel=1e-6)
    assert maps.id_image[24, 24] == 1
    assert maps.depth[24, 24] == pytest.approx(0.95, rel=1e-6)
    assert maps.id_image[23, 31] == 0
    assert maps.depth[23, 31] == 0.0


def test_stacked_boxes_relations_and_difficulty(stacked_scene, camera):
    maps = render_maps(stacked_scene, camera)
    matrix = relation_matrix(maps)
    assert matrix.tolist() == [[0, -1], [1, 0]]
    graph = layer_graph(matrix)
    assert graph.layers == (Layer.SECONDARY, Layer.TOP)
    assert graph.edges == ((1, 0),)
    assert graph.layer_count == 2
    features = measure_difficulty_features(maps, graph, [1, 2])
    assert features == DifficultyFeatures(2, pytest.approx(0.0625), True, True)
    # occlusion above the 5 % limit keeps the scene out of the easiest level
    assert difficulty(features).level == 2


def test_tote_renders_as_background(stacked_scene, camera):
    scene = Scene(stacked_scene.objects, tote=tote(inner=(0.4, 0.3, 0.2)))
    maps = render_maps(scene, camera)
    assert maps.total_pixels().tolist() == [256, 16]
    # floor of the tote, left of the large box
    assert maps.id_image[31, 20] == 0
    assert maps.depth[31, 20] == pytest.approx(1.0, rel=1e-6)
    assert maps.id_image[31, 31] == 2


def test_half_covered_instance(camera):
    scene = Scene((
        posed(1, 1, box((0.1, 0.1, 0.02)), [0.0, 0.0, 0.01]),
        posed(2, 2, box((0.05, 0.1, 0.02)), [0.025, 0.0, 0.03]),
    ))
    maps = render_maps(scene, camera)
    assert maps.total_pixels().tolist() == [64, 32]
    assert maps.occlusion_scores() == pytest.approx([0.5, 0.0])
    assert relation_matrix(maps).tolist() == [[0, -1], [1, 0]]


def test_occlusion_chain_has_three_layers(camera):
    # A overlaps B, B overlaps C, A and C do not overlap in the image
    scene = Scene((
        posed(1, 1, box((0.04, 0.04, 0.02)), [0.02, 0.0, 0.05]),
        posed(2, 2, box((0.06, 0.04, 0.02)), [-0.01, 0.0, 0.03]),
        posed(3, 3, box((0.04, 0.04, 0.02)), [-0.04, 0.0, 0.01]),
    ))
    maps = render_maps(scene, camera)
    assert maps.total_pixels().tolist() == [12, 20, 12]
    assert maps.visible_pixels().tolist() == [12, 12, 8]
    matrix = relation_matrix(maps)
    assert matrix.tolist() == [[0, 1, 0], [-1, 0, 1], [0, -1, 0]]
    graph = layer_graph(matrix)
    assert graph.layers == (Layer.TOP, Layer.SECONDARY, Layer.SECONDARY)
    assert graph.layer_count == 3
    features = measure_difficulty_features(maps, graph, [1, 2, 3])
    assert features.max_occlusion == pytest.approx(0.4)
    assert difficulty(features).level == 2


def test_disjoint_and_off_screen_instances(camera):
    scene = Scene((
        posed(1, 1, box((0.04, 0.04, 0.04)), [-0.15, 0.0, 0.02]),
        posed(2, 2, box((0.04, 0.04, 0.04)), [0.15, 0.0, 0.02]),
        posed(3, 1, box((0.04, 0.04, 0.04)), [5.0, 0.0, 0.02]),
    ))
    maps = render_maps(scene, camera)
    assert maps.total_pixels()[2] == 0
    assert maps.occlusion_scores()[:2] == [0.0, 0.0]
    assert maps.occlusion_scores()[2] is None
    matrix = relation_matrix(maps)
    assert not matrix.any()
    graph = layer_graph(matrix)
    assert graph.layer_count == 1
    assert set(graph.layers) == {Layer.TOP}
    # the off-screen duplicate class is not counted
    assert measure_difficulty_features(maps, graph, [1, 2, 1]).classes_unique


def test_fully_hidden_instance(camera):
    scene = Scene((
        posed(1, 1, box((0.05, 0.05, 0.05)), [0.0, 0.0, 0.025]),
        posed(2, 2, box((0.2, 0.2, 0.05)), [0.0, 0.0, 0.075]),
    ))
    maps = render_maps(scene, camera)
    assert maps.total_pixels()[0] == 16
    assert maps.visible_pixels()[0] == 0
    assert maps.fully_hidden() == [True, False]
    assert maps.occlusion_scores()[0] == pytest.approx(1.0 - 1.0 / 16)
    assert relation_matrix(maps).tolist() == [[0, -1], [1, 0]]
    graph = layer_graph(relation_matrix(maps))
    features = measure_difficulty_features(maps, graph, [1, 2])
    assert not features.instances_complete
    assert difficulty(features).level == 3


def test_rendering_is_deterministic(stacked_scene, camera):
    first = render_maps(stacked_scene, camera)
    second = render_maps(stacked_scene, camera)
    assert np.array_equal(first.id_image, second.id_image)
    assert np.array_equal(first.depth, second.depth)
    assert np.array_equal(first.amodal, second.amodal)


def test_layer_graph_two_occluders():
    graph = layer_graph(np.array([[0, 0, 1], [0, 0, 1], [-1, -1, 0]]))
    assert graph.layers == (Layer.TOP, Layer.TOP, Layer.OTHERS)
    assert graph.occluder_counts == (0, 0, 2)
    assert graph.layer_count == 2
    assert graph.to_dict([5, 6, 7]) == {
        "layers": {"5": "top", "6": "top", "7": "others"},
        "edges": [[5, 7], [6, 7]],
        "layer_count": 2,
    }


def test_layer_graph_cycle_terminates():
    graph = layer_graph(np.array([[0, 1, -1], [-1, 0, 1], [1, -1, 0]]))
    assert graph.layers == (Layer.SECONDARY,) * 3
    assert graph.layer_count == 3


def test_layer_graph_empty():
    graph = layer_graph(np.zeros((0, 0), dtype=int))
    assert graph.layers == ()
    assert graph.layer_count == 0


@pytest.mark.parametrize("features,expected", [
    (DifficultyFeatures(1, 0.0, True, True), 1),
    (DifficultyFeatures(2, 0.05, True, True), 1),
    (DifficultyFeatures(3, 0.0, True, True), 2),
    (DifficultyFeatures(1, 0.06, True, True), 2),
    (DifficultyFeatures(1, 0.0, False, True), 3),
    (DifficultyFeatures(1, 0.0, True, False), 4),
    (DifficultyFeatures(1, 0.0, False, False), 5),
])
def test_difficulty_levels(features, expected):
    assert difficulty(features).level == expected


def test_difficulty_custom_limits():
    features = DifficultyFeatures(3, 0.1, True, True)
    assert difficulty(features, layer_limit=3, occlusion_limit=0.2).level == 1
    assert difficulty(features).to_dict() == {"level": 2, "layer_count": 3, "max_occlusion": 0.1,
                                              "instances_complete": True, "classes_unique": True}


def test_visible_components():
    mask = np.zeros((10, 10), dtype=bool)
    mask[0:2, 0:2] = True
    mask[5:7, 5:8] = True
    mask[9, 0] = True
    assert visible_components(mask) == 2
    assert visible_components(mask, min_pixels=1) == 3
    assert visible_components(np.eye(2, dtype=bool), min_pixels=1) == 2
    assert visible_components(np.zeros((4, 4), dtype=bool)) == 0


def _split_maps():
    # instance 1 is cut in two by instance 2
    ids = np.zeros((8, 8), dtype=np.uint16)
    ids[0:2, 0:2] = 1
    ids[0:2, 5:7] = 1
    ids[0:3, 2:5] = 2
    amodal = np.zeros((2, 8, 8), dtype=bool)
    amodal[0, 0:2, 0:7] = True
    amodal[1] = ids == 2
    return InstanceMaps((1, 2), ids, np.zeros((8, 8), dtype=np.float32), amodal)


@pytest.mark.parametrize("class_ids,expected", [([1, 2], 3), ([1, 1], 5)])
def test_split_instance_is_incomplete(class_ids, expected):
    maps = _split_maps()
    graph = layer_graph(relation_matrix(maps))
    features = measure_difficulty_features(maps, graph, class_ids)
    assert not features.instances_complete
    assert features.max_occlusion == pytest.approx(6 / 14)
    assert difficulty(features).level == expected


def test_small_components_are_ignored():
    maps = _split_maps()
    graph = layer_graph(relation_matrix(maps))
    features = measure_difficulty_features(maps, graph, [1, 2], min_pixels=5)
    assert features.instances_complete
    assert difficulty(features).level == 2


def test_keypoints_project_with_visibility(stacked_scene, camera):
    keypoints = project_keypoints(stacked_scene, camera)
    assert [(k.id_sem, k.id_instance, k.id_class) for k in keypoints] == [(0, 1, 1), (1, 1, 1)]
    hidden, corner = keypoints
    assert (hidden.x, hidden.y) == pytest.approx((31.5, 31.5))
    assert not hidden.visible
    assert corner.x == pytest.approx(31.5 + 80.0 * 0.09 / 0.95)
    assert corner.y == pytest.approx(31.5 - 80.0 * 0.09 / 0.95)
    assert corner.visible
    assert corner.to_dict()["visible"] is True


def test_keypoints_behind_camera_are_dropped(camera):
    scene = Scene((posed(1, 4, box((0.05, 0.05, 0.05)), [0.0, 0.0, 0.025],
                         keypoints=[[0.0, 0.0, 2.0], [5.0, 0.0, 0.0], [0.0, 0.0, 0.025]]),))
    keypoints = project_keypoints(scene, camera)
    assert [k.id_sem for k in keypoints] == [1, 2]
    assert [k.visible for k in keypoints] == [False, True]
    assert keypoints[0].id_class == 4


def test_com_heatmap_peaks_at_projected_center(stacked_scene, camera):
    shifted = replace(camera, cx=32.0, cy=32.0)
    heat = com_heatmap(stacked_scene, shifted, 2, sigma=8.0)
    assert heat.shape == (64, 64)
    assert heat[32, 32] == pytest.approx(1.0)
    assert np.unravel_index(np.argmax(heat), heat.shape) == (32, 32)
    assert heat[32, 40] == pytest.approx(np.exp(-0.5))
    assert heat.min() >= 0.0


def test_com_heatmap_needs_closed_mesh(camera):
    sheet = TriMesh([[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.0, 0.1, 0.0]], [[0, 1, 2]])
    with pytest.raises(NotWatertight):
        com_heatmap(Scene((posed(1, 1, sheet, [0.0, 0.0, 0.0]),)), camera, 1)
