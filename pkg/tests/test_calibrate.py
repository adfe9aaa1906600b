"""
Unit tests for src.calibrate in GraspLab.
Covers:
- Search box scaling and validation
- Expected improvement
- Contact snapping and measurement ingestion
- Objective, Bayesian optimization on synthetic records
- Held-out accuracy, budget prefixes and the random-search baseline
- Classification report and tear-off summary

Author: GraspLab Team
"""

import numpy as np
import pytest

from src.calibrate import (CalibrationParams, ClassificationReport, SealAttemptRecord, SealModelObjective, SearchBox,
                           bayes_maximize, bayes_optimize, classification_report, expected_improvement,
                           generate_synthetic_records, objective, random_search, records_from_measurements,
                           snap_to_surface, tearoff_summary)
from src.errors import EmptyRecordSet, ValidationError
from src.primitives import box
from src.serialization import MeasurementRow
from src.suction import VacuumGraspCandidate

DOWN = np.array([0.0, 0.0, -1.0])
TRUTH = CalibrationParams(1.0, 0.005)


def test_search_box_scaling():
    box_ = SearchBox()
    assert box_.from_unit([0.0, 0.0]) == pytest.approx((0.01, 0.0))
    assert box_.from_unit([1.0, 1.0]) == pytest.approx((100.0, 0.5))
    middle = box_.from_unit([0.5, 0.5])
    assert middle.ring_ratio == pytest.approx(1.0)
    # shifted log axis: the midpoint is the geometric mean of the shifted bounds
    assert middle.break_fraction == pytest.approx(np.sqrt(1e-4 * 0.5001) - 1e-4)
    expected = (np.log10(0.1001) - np.log10(1e-4)) / (np.log10(0.5001) - np.log10(1e-4))
    assert box_.to_unit(CalibrationParams(10.0, 0.1)) == pytest.approx([0.75, expected])
    assert box_.from_unit(box_.to_unit(TRUTH)) == pytest.approx(TRUTH)
    assert box_.contains(TRUTH)
    assert not box_.contains(CalibrationParams(1000.0, 0.2))


@pytest.mark.parametrize("kwargs", [
    {"ring_ratio": (1.0, 1.0)},
    {"ring_ratio": (0.0, 10.0)},
    {"break_fraction": (-0.1, 0.5)},
    {"break_fraction": (0.0, float("inf"))},
    {"break_offset": 0.0},
])
def test_search_box_validation(kwargs):
    with pytest.raises(ValidationError):
        SearchBox(**kwargs)


def test_expected_improvement():
    ei = expected_improvement(np.array([0.5, 0.7, 0.9]), np.array([0.0, 0.0, 0.0]), 0.7)
    assert ei == pytest.approx([0.0, 0.0, 0.2])
    at_best = expected_improvement(np.array([0.7]), np.array([1.0]), 0.7)
    assert at_best == pytest.approx([1.0 / np.sqrt(2.0 * np.pi)])
    ranked = expected_improvement(np.array([0.6, 0.7, 0.8]), np.full(3, 0.1), 0.7)
    assert np.all(np.diff(ranked) > 0)


def test_snap_to_surface(cube):
    assert snap_to_surface(cube, np.array([0.01, 0.02, 0.052]), DOWN) == pytest.approx([0.01, 0.02, 0.05])
    assert snap_to_surface(cube, np.array([0.01, 0.02, 0.048]), DOWN) == pytest.approx([0.01, 0.02, 0.05])
    assert snap_to_surface(cube, np.array([0.01, 0.02, 0.07]), DOWN) is None


def _row(row, contact, label=True, tearoff=None):
    return MeasurementRow(row, "cube.obj", np.array(contact, dtype=float), DOWN, label, tearoff)


def test_records_from_measurements(cube_obj):
    rows = [_row(2, [0.01, 0.02, 0.051], tearoff=30.0), _row(3, [0.01, 0.02, 0.2])]
    (record,) = records_from_measurements(rows, cube_obj.parent)
    assert record.row == 2
    assert record.mesh_ref == "cube.obj"
    assert record.candidate.contact == pytest.approx([0.01, 0.02, 0.05])
    assert record.tearoff == 30.0
    with pytest.raises(EmptyRecordSet):
        records_from_measurements(rows[1:], cube_obj.parent)


def _labelled(mesh, contact, observed, tearoff=None):
    return SealAttemptRecord(mesh, VacuumGraspCandidate(contact, DOWN), observed, tearoff)


def test_classification_report(cube):
    center, edge = [0.0, 0.0, 0.05], [0.05, 0.0, 0.05]
    records = [_labelled(cube, center, True), _labelled(cube, center, False),
               _labelled(cube, edge, False), _labelled(cube, edge, True)]
    report = classification_report(records, TRUTH)
    assert (report.true_positive, report.false_positive, report.true_negative, report.false_negative) == (1, 1, 1, 1)
    assert report.to_dict()["ppv"] == 0.5
    assert report.accuracy == 0.5
    assert objective(records, TRUTH) == 0.5


def test_report_ratios_without_support():
    report = ClassificationReport(0, 0, 3, 0)
    assert report.ppv is None
    assert report.sensitivity is None
    assert report.npv == 1.0
    assert report.accuracy == 1.0


def test_tearoff_summary(cube):
    records = [_labelled(cube, [0.0, 0.0, 0.05], True, 10.0), _labelled(cube, [0.0, 0.0, 0.05], True, 20.0),
               _labelled(cube, [0.0, 0.0, 0.05], False, 99.0), _labelled(cube, [0.0, 0.0, 0.05], True)]
    assert tearoff_summary(records) == {"count": 2, "mean": 15.0, "min": 10.0, "max": 20.0}
    assert tearoff_summary(records[2:]) == {"count": 0, "mean": None, "min": None, "max": None}


def test_objective_needs_records():
    with pytest.raises(EmptyRecordSet):
        SealModelObjective([])


def test_synthetic_records_match_truth():
    cube = box((0.1, 0.1, 0.1), name="cube")
    records = generate_synthetic_records([cube], TRUTH, 40, seed=0)
    assert len(records) == 40
    assert all(r.mesh_ref == "cube" for r in records)
    assert objective(records, TRUTH) == 1.0
    noisy = generate_synthetic_records([cube], TRUTH, 40, seed=0, noise=0.25)
    assert objective(noisy, TRUTH) == pytest.approx(0.75)


def test_synthetic_records_round_robin():
    meshes = [box((0.1, 0.1, 0.1), name="a"), box((0.08, 0.08, 0.08), name="b")]
    records = generate_synthetic_records(meshes, TRUTH, 5, seed=1)
    assert [r.mesh_ref for r in records].count("a") == 3
    with pytest.raises(ValidationError):
        generate_synthetic_records(meshes, TRUTH, 5, seed=1, noise=1.5)


def test_bayes_optimize_recovers_break_threshold():
    cube = box((0.1, 0.1, 0.1), name="cube")
    records = generate_synthetic_records([cube], TRUTH, 60, seed=3)
    result = bayes_optimize(records, budget=12, seed=0)
    assert len(result.trace) == 12
    assert all(result.box.contains(p) for p, _ in result.trace)
    assert result.best_objective == max(v for _, v in result.trace)
    assert result.best_objective >= 0.9
    again = bayes_optimize(records, budget=12, seed=0)
    assert again.to_dict() == result.to_dict()


def test_bayes_maximize_smooth_function():
    def bowl(params):
        return -((np.log10(params.ring_ratio) - 0.5) ** 2) - (params.break_fraction - 0.3) ** 2

    result = bayes_maximize(bowl, budget=20, seed=1)
    initial_best = max(v for _, v in result.trace[:10])
    assert result.best_objective >= initial_best
    assert result.to_dict()["best_params"] == result.best._asdict()


def test_budget_below_minimum():
    with pytest.raises(ValidationError):
        bayes_maximize(lambda p: 0.0, budget=5)


def _flipped(records):
    return [SealAttemptRecord(r.mesh, r.candidate, not r.observed_seal, r.tearoff, r.mesh_ref) for r in records]


@pytest.mark.parametrize("params", [TRUTH, CalibrationParams(0.05, 0.0), CalibrationParams(30.0, 0.4)])
def test_flipping_every_label_complements_the_objective(params):
    cube = box((0.1, 0.1, 0.1), name="cube")
    records = generate_synthetic_records([cube], TRUTH, 30, seed=4)
    assert objective(_flipped(records), params) == pytest.approx(1.0 - objective(records, params))


def test_shorter_budget_trace_is_a_prefix():
    cube = box((0.1, 0.1, 0.1), name="cube")
    records = generate_synthetic_records([cube], TRUTH, 40, seed=5)
    short = bayes_optimize(records, budget=12, seed=2)
    long = bayes_optimize(records, budget=20, seed=2)
    assert long.trace[:12] == short.trace
    assert long.best_objective >= short.best_objective


def test_budget_equal_to_initial_design_keeps_best_initial_point():
    def bowl(params):
        return -((np.log10(params.ring_ratio) - 0.5) ** 2)

    result = bayes_maximize(bowl, budget=10, initial_design=10, seed=3)
    assert len(result.trace) == 10
    assert result.best_objective == max(v for _, v in result.trace)
    assert result.best == result.trace[int(np.argmax([v for _, v in result.trace]))][0]


def test_random_search_baseline():
    cube = box((0.1, 0.1, 0.1), name="cube")
    records = generate_synthetic_records([cube], TRUTH, 40, seed=6)
    fn = SealModelObjective(records)
    baseline = random_search(fn, budget=30, seed=0)
    assert len(baseline.trace) == 30
    assert all(baseline.box.contains(p) for p, _ in baseline.trace)
    assert random_search(fn, budget=30, seed=0).to_dict() == baseline.to_dict()
    tuned = bayes_maximize(fn, budget=30, seed=0)
    assert tuned.best_objective >= baseline.best_objective - 0.05


def test_calibration_generalizes_to_held_out_records():
    meshes = [box((0.1, 0.1, 0.1), name="cube"), box((0.06, 0.12, 0.04), name="brick")]
    held_out_accuracy = []
    for seed in range(5):
        train = generate_synthetic_records(meshes, TRUTH, 60, seed=seed)
        test = generate_synthetic_records(meshes, TRUTH, 60, seed=100 + seed)
        result = bayes_optimize(train, budget=60, seed=seed)
        assert result.best_objective >= 0.95
        held_out_accuracy.append(objective(test, result.best))
    assert np.mean(held_out_accuracy) >= 0.95
