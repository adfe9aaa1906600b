"""
cli.py

Command-line front-end for GraspLab.

    python -m src sample-pj MESH --out DIR [--seed N] [--gripper FILE] [--max-grasps N]
    python -m src sample-vacuum MESH --out DIR [--seed N] [--cup FILE] [--count N] [--plots]
    python -m src label-scene SCENE CAMERA --out DIR [--resolution N] [--grasps ID=FILE ...] [--heatmaps]
    python -m src calibrate CSV --out DIR [--seed N] [--budget N] [--cup FILE] [--plots]
    python -m src render-debug SCENE CAMERA --out DIR [--resolution N] [--sigma S]

Every command writes run_config.json first; on failure the other outputs of the run
are removed. Exit codes: 0 success, 1 runtime error, 2 usage or validation error.

Author: GraspLab Team
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .calibrate import (SearchBox, bayes_optimize, classification_report,
                        records_from_measurements, tearoff_summary)
from .config import APP_DESCRIPTION, APP_TITLE, CALIBRATION_DEFAULTS, PJ_SAMPLER_DEFAULTS, SCENE_DEFAULTS
from .errors import GraspLabError, NotWatertight, ValidationError
from .grasp_label import label_from_pj, label_from_vacuum
from .mesh import load_mesh, mass_properties
from .pj_sampler import GripperGeometry, PjSamplerConfig, load_gripper, sample_pj_grasps
from .scene import filter_grasps_in_scene
from .scene_labels import (com_heatmap, difficulty, layer_graph, measure_difficulty_features,
                           project_keypoints, relation_matrix, render_maps)
from .serialization import (dumps, load_camera, load_scene, read_grasp_labels, read_measurements,
                            write_grasp_labels, write_json, write_pfm, write_pgm16)
from .suction import FailureReason, SuctionCupParams, load_cup_params, sample_vacuum_candidates
from .utils import get_logger

logger = get_logger(__name__)

VACUUM_SAMPLES = 500


class RunOutputs:
    """
    Output directory of one run. Files registered through `path` are removed again
    by `discard` when the run fails.
    """

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.written: List[Path] = []

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self.written.append(p)
        return p

    def discard(self):
        for p in self.written:
            p.unlink(missing_ok=True)
        logger.info("Removed %d partial output(s) from %s.", len(self.written), self.out_dir)


def _cup_from_args(args) -> SuctionCupParams:
    return load_cup_params(args.cup) if args.cup else SuctionCupParams()


def _gripper_from_args(args) -> GripperGeometry:
    return load_gripper(args.gripper) if args.gripper else GripperGeometry()


def cmd_sample_pj(args, outputs: RunOutputs) -> int:
    mesh = load_mesh(args.mesh)
    config = PjSamplerConfig(max_grasps=args.max_grasps, contact_samples=args.contact_samples,
                             attempts=args.attempts, rotations=args.rotations)
    grasps = sample_pj_grasps(mesh, _gripper_from_args(args), config, args.seed)
    write_grasp_labels(outputs.path("pj_grasps.json"), [label_from_pj(g) for g in grasps],
                       {"mesh": args.mesh, "seed": args.seed})
    print(f"{len(grasps)} parallel-jaw grasps written to {outputs.out_dir / 'pj_grasps.json'}")
    return 0


def cmd_sample_vacuum(args, outputs: RunOutputs) -> int:
    cup = _cup_from_args(args)
    mesh = load_mesh(args.mesh)
    try:
        props = mass_properties(mesh)
    except NotWatertight:
        props = None
        logger.warning("%s is not watertight; sc_sim scores left empty.", args.mesh)
    results = sample_vacuum_candidates(mesh, cup, args.count, args.seed)
    labels = [label_from_vacuum(c, e, cup, props) for c, e in results]
    sealed = sum(1 for _, e in results if e.success)
    summary = {"count": len(results), "sealed": sealed, "success_fraction": sealed / len(results)}
    write_grasp_labels(outputs.path("vacuum_grasps.json"), labels,
                       {"mesh": args.mesh, "seed": args.seed, "cup": cup.to_dict(), "summary": summary})
    print(f"sealed {sealed}/{len(results)} vacuum candidates (success fraction {summary['success_fraction']:.3f})")
    if args.plots:
        from .visualization import plot_label_summary, plot_seal_rim
        fractions = {reason.value: sum(1 for _, e in results if e.failure_reason == reason) / len(results)
                     for reason in FailureReason}
        # rim of the first candidate that lifted off, else the first candidate
        shown = next((e for _, e in results if e.failure_reason == FailureReason.FORCE_LIFTOFF), results[0][1])
        _save_figures(outputs, [("vacuum_summary.png", lambda: plot_label_summary(fractions, "Seal Outcomes")),
                                ("seal_rim.png", lambda: plot_seal_rim(shown))])
    return 0


def _parse_grasp_files(values: Optional[Sequence[str]]) -> Dict[int, str]:
    files = {}
    for value in values or []:
        key, sep, path = value.partition("=")
        if not sep or not key.strip().isdigit() or not path:
            raise ValidationError(f"--grasps expects INSTANCE_ID=FILE, got {value!r}.")
        files[int(key)] = path
    return files


def cmd_label_scene(args, outputs: RunOutputs) -> int:
    scene = load_scene(args.scene)
    camera = load_camera(args.camera)
    if args.resolution:
        camera = camera.rescaled(args.resolution)
    grasp_files = _parse_grasp_files(args.grasps)
    for instance_id in grasp_files:
        if instance_id not in scene.instance_ids:
            raise ValidationError(f"--grasps names unknown instance {instance_id}.")

    maps = render_maps(scene, camera)
    write_pgm16(outputs.path("instance_ids.pgm"), maps.id_image)
    write_pfm(outputs.path("depth.pfm"), maps.depth)
    for k, instance_id in enumerate(maps.instance_ids):
        write_pgm16(outputs.path(f"amodal_{instance_id}.pgm"), maps.amodal[k].astype("uint16") * instance_id)

    matrix = relation_matrix(maps)
    graph = layer_graph(matrix)
    features = measure_difficulty_features(maps, graph, [o.class_id for o in scene.objects])
    level = difficulty(features)
    scores = maps.occlusion_scores()
    hidden = maps.fully_hidden()
    totals, visibles = maps.total_pixels(), maps.visible_pixels()
    document = {
        "image": {"width": camera.width, "height": camera.height},
        "instances": [
            {"instance_id": o.instance_id, "class_id": o.class_id, "occlusion": scores[k],
             "fully_hidden": hidden[k], "total_pixels": int(totals[k]), "visible_pixels": int(visibles[k])}
            for k, o in enumerate(scene.objects)
        ],
        "relation_matrix": matrix.tolist(),
        "layers": graph.to_dict(maps.instance_ids),
        "difficulty": level.to_dict(),
        "keypoints": [kp.to_dict() for kp in project_keypoints(scene, camera)],
    }

    if args.heatmaps:
        for o in scene.objects:
            try:
                heat = com_heatmap(scene, camera, o.instance_id, args.sigma)
            except NotWatertight:
                logger.warning("Instance %d is not watertight; no heat map.", o.instance_id)
                continue
            write_pfm(outputs.path(f"heatmap_{o.instance_id}.pfm"), heat)

    if grasp_files:
        grasps = {i: read_grasp_labels(p) for i, p in sorted(grasp_files.items())}
        filtered = filter_grasps_in_scene(scene, camera, grasps, _gripper_from_args(args), _cup_from_args(args))
        document["grasps"] = {str(i): [f.to_dict() for f in results] for i, results in filtered.items()}

    write_json(outputs.path("labels.json"), document)
    print(f"labeled {len(scene.objects)} instances: difficulty level {level.level}")
    return 0


def _save_figures(outputs: RunOutputs, figures) -> None:
    """Save (name, figure factory) pairs as PNG with the Agg backend."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    for name, make in figures:
        fig = make()
        fig.savefig(outputs.path(name), dpi=100, metadata={"Software": None})
        plt.close(fig)


def cmd_calibrate(args, outputs: RunOutputs) -> int:
    cup = _cup_from_args(args)
    rows = read_measurements(args.csv)
    records = records_from_measurements(rows, Path(args.csv).parent)
    result = bayes_optimize(records, SearchBox(), args.budget, args.seed, cup)
    report = classification_report(records, result.best, cup)
    document = {
        **result.to_dict(),
        "budget": args.budget,
        "seed": args.seed,
        "records": len(records),
        "report": report.to_dict(),
        "tearoff": tearoff_summary(records),
        "cup": cup.with_calibration(*result.best).to_dict(),
    }
    write_json(outputs.path("calibration.json"), document)
    if args.plots:
        from .visualization import plot_calibration_trace
        _save_figures(outputs, [("calibration_trace.png", lambda: plot_calibration_trace(result))])
    print(f"best accuracy {result.best_objective:.4f} at ring_ratio={result.best.ring_ratio:.4g}, "
          f"break_fraction={result.best.break_fraction:.4g}")
    return 0


def cmd_render_debug(args, outputs: RunOutputs) -> int:
    from .visualization import plot_depth, plot_heatmap, plot_instance_map

    scene = load_scene(args.scene)
    camera = load_camera(args.camera)
    if args.resolution:
        camera = camera.rescaled(args.resolution)
    maps = render_maps(scene, camera)
    figures = [("instances.png", lambda: plot_instance_map(maps)), ("depth.png", lambda: plot_depth(maps.depth))]
    for o in scene.objects:
        if o.world_mass_properties is None:
            continue
        heat = com_heatmap(scene, camera, o.instance_id, args.sigma)
        figures.append((f"heatmap_{o.instance_id}.png", lambda heat=heat: plot_heatmap(heat, maps.depth)))
    _save_figures(outputs, figures)
    print(f"debug figures written to {outputs.out_dir}")
    return 0


COMMANDS = {
    "sample-pj": cmd_sample_pj,
    "sample-vacuum": cmd_sample_vacuum,
    "label-scene": cmd_label_scene,
    "calibrate": cmd_calibrate,
    "render-debug": cmd_render_debug,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grasplab", description=f"{APP_TITLE}: {APP_DESCRIPTION}")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="logging level (default: WARNING)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output directory (created if absent)")
        p.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")

    p = sub.add_parser("sample-pj", help="sample parallel-jaw grasps on a mesh")
    p.add_argument("mesh")
    common(p)
    p.add_argument("--gripper", help="gripper geometry JSON")
    p.add_argument("--max-grasps", type=int, default=PJ_SAMPLER_DEFAULTS["max_grasps"])
    p.add_argument("--contact-samples", type=int, default=PJ_SAMPLER_DEFAULTS["contact_samples"])
    p.add_argument("--attempts", type=int, default=PJ_SAMPLER_DEFAULTS["attempts"])
    p.add_argument("--rotations", type=int, default=PJ_SAMPLER_DEFAULTS["rotations"])

    p = sub.add_parser("sample-vacuum", help="sample and evaluate vacuum grasps on a mesh")
    p.add_argument("mesh")
    common(p)
    p.add_argument("--cup", help="suction cup parameter JSON")
    p.add_argument("--count", type=int, default=VACUUM_SAMPLES)
    p.add_argument("--plots", action="store_true", help="write outcome and seal rim figures")

    p = sub.add_parser("label-scene", help="render and label one scene viewpoint")
    p.add_argument("scene")
    p.add_argument("camera")
    common(p)
    p.add_argument("--resolution", type=int, help="rescale the camera to an N x N image")
    p.add_argument("--grasps", action="append", metavar="ID=FILE", help="object grasp labels to filter")
    p.add_argument("--heatmaps", action="store_true", help="write center-of-mass heat maps")
    p.add_argument("--sigma", type=float, default=SCENE_DEFAULTS["heatmap_sigma"])
    p.add_argument("--gripper", help="gripper geometry JSON")
    p.add_argument("--cup", help="suction cup parameter JSON")

    p = sub.add_parser("calibrate", help="fit the seal model to measurements")
    p.add_argument("csv")
    common(p)
    p.add_argument("--budget", type=int, default=CALIBRATION_DEFAULTS["budget"])
    p.add_argument("--cup", help="suction cup parameter JSON")
    p.add_argument("--plots", action="store_true", help="write the calibration trace figure")

    p = sub.add_parser("render-debug", help="write debug figures of a scene viewpoint")
    p.add_argument("scene")
    p.add_argument("camera")
    common(p)
    p.add_argument("--resolution", type=int, help="rescale the camera to an N x N image")
    p.add_argument("--sigma", type=float, default=SCENE_DEFAULTS["heatmap_sigma"])
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s %(name)s: %(message)s")

    try:
        outputs = RunOutputs(Path(args.out))
        options = {k: v for k, v in sorted(vars(args).items()) if k != "log_level"}
        outputs.path("run_config.json").write_text(dumps({"argv": argv, "command": args.command, "options": options}))
        outputs.written.clear()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        return COMMANDS[args.command](args, outputs)
    except ValidationError as exc:
        outputs.discard()
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GraspLabError, OSError) as exc:
        outputs.discard()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        outputs.discard()
        logger.exception("Unexpected failure in %s.", args.command)
        return 1


if __name__ == "__main__":
    sys.exit(main())
