"""
visualization.py

Debug figures for GraspLab.
- Instance-ID, depth and heat-map images of a rendered viewpoint
- Calibration trace (objective per evaluation and running best)
- Seal rim: rest and projected mass points with contact-force liftoff markers
- Summary bar plot of label statistics

Every function returns a matplotlib Figure; saving is left to the caller.

Author: GraspLab Team
"""

from typing import Dict, Optional

import matplotlib.pyplot as plt
import numpy as np

from .calibrate import CalibrationResult
from .scene_labels import InstanceMaps
from .suction import SealEvaluation


def plot_instance_map(maps: InstanceMaps, title: str = "Visible Instances"):
    """
    Show the visible instance-ID image; background (0) is white.
    """
    ids = np.ma.masked_equal(maps.id_image.astype(float), 0)
    fig, ax = plt.subplots()
    im = ax.imshow(ids, cmap="tab20", interpolation="nearest")
    ax.set_title(title)
    ax.set_xlabel("x [px]")
    ax.set_ylabel("y [px]")
    fig.colorbar(im, ax=ax, label="instance id")
    fig.tight_layout()
    return fig


def plot_depth(depth: np.ndarray, title: str = "Depth"):
    shown = np.ma.masked_equal(depth, 0.0)
    fig, ax = plt.subplots()
    im = ax.imshow(shown, cmap="viridis", interpolation="nearest")
    ax.set_title(title)
    ax.set_xlabel("x [px]")
    ax.set_ylabel("y [px]")
    fig.colorbar(im, ax=ax, label="z-depth [m]")
    fig.tight_layout()
    return fig


def plot_heatmap(heat: np.ndarray, background: Optional[np.ndarray] = None, title: str = "Center of Mass Heat Map"):
    fig, ax = plt.subplots()
    if background is not None:
        ax.imshow(background, cmap="gray", interpolation="nearest")
    im = ax.imshow(heat, cmap="inferno", alpha=0.6 if background is not None else 1.0, vmin=0.0, vmax=1.0)
    ax.set_title(title)
    ax.set_xlabel("x [px]")
    ax.set_ylabel("y [px]")
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    return fig


def plot_calibration_trace(result: CalibrationResult, title: str = "Seal Model Calibration"):
    """
    Objective per evaluation with the running best.
    """
    values = [v for _, v in result.trace]
    evals = list(range(1, len(values) + 1))
    fig, ax = plt.subplots()
    ax.plot(evals, values, "o", color="#7f7f7f", label="Evaluation")
    ax.plot(evals, np.maximum.accumulate(values), color="#d62728", linewidth=2, label="Best so far")
    ax.set_xlabel("Evaluation")
    ax.set_ylabel("Accuracy")
    ax.set_title(title)
    ax.legend()
    ax.grid(True, linestyle="--", linewidth=0.5, alpha=0.7)
    fig.tight_layout()
    return fig


def plot_seal_rim(evaluation: SealEvaluation, title: str = "Suction Cup Rim"):
    """
    Rest and projected rim points in 3D; mass points that lift off are marked red.
    """
    fig = plt.figure()
    ax = fig.add_subplot(projection="3d")
    rest = evaluation.rest_positions
    ax.plot(*np.vstack([rest, rest[:1]]).T, color="#1f77b4", linewidth=1, label="Rest")
    projected = evaluation.projected_positions
    hit = np.all(np.isfinite(projected), axis=1)
    ax.scatter(*projected[hit].T, color="#2ca02c", s=12, label="Projected")
    if evaluation.liftoff_indices:
        lifted = projected[list(evaluation.liftoff_indices)]
        ax.scatter(*lifted.T, color="#d62728", s=24, label="Liftoff")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_zlabel("z [m]")
    ax.set_title(f"{title} ({evaluation.failure_reason.value})")
    ax.legend()
    fig.tight_layout()
    return fig


def plot_label_summary(summary: Dict[str, float], title: str = "Label Summary"):
    """
    Bar plot of scalar label statistics.
    """
    keys = list(summary.keys())
    values = [summary[k] for k in keys]
    fig, ax = plt.subplots()
    ax.bar(keys, values, color="#7f7f7f")
    ax.set_ylabel("Value")
    ax.set_title(title)
    for i, v in enumerate(values):
        ax.text(i, v, f"{v:.2f}", ha="center", va="bottom")
    fig.tight_layout()
    return fig
