"""
serialization.py

File formats for GraspLab.
- Scene and camera JSON readers (schema errors carry a JSON pointer)
- 16-bit binary PGM and little-endian PFM image writers/readers
- Grasp label JSON files and the per-viewpoint labels.json document
- Seal measurement CSV reader (pandas)

All JSON is written with sorted keys and a fixed layout so that repeated runs produce
byte-identical files.

Author: GraspLab Team
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .errors import EmptyRecordSet, ParseError, RecordError, SchemaError
from .geometry import RigidTransform
from .grasp_label import GraspLabel
from .mesh import TriMesh, load_mesh
from .scene import Camera, Scene, SceneObject
from .utils import get_logger, to_float

logger = get_logger(__name__)

PathLike = Union[str, Path]

MEASUREMENT_COLUMNS = ("mesh", "contact_x", "contact_y", "contact_z",
                       "approach_x", "approach_y", "approach_z", "label", "tearoff_n")


# ---------------------------------------------------------------- JSON

def read_json(path: PathLike) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", str(path), exc.lineno) from exc


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_json(path: PathLike, data: Any) -> Path:
    path = Path(path)
    path.write_text(dumps(data))
    return path


def _require(data: dict, key: str, pointer: str):
    if not isinstance(data, dict):
        raise SchemaError("expected an object", pointer or "/")
    if key not in data:
        raise SchemaError(f"missing key {key!r}", f"{pointer}/{key}")
    return data[key]


def _pose(value, pointer: str) -> RigidTransform:
    try:
        return RigidTransform.from_matrix(value)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"invalid pose: {exc}", pointer) from exc


def _number(value, pointer: str, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or (integer and not isinstance(value, int)):
        raise SchemaError(f"expected {'an integer' if integer else 'a number'}, got {value!r}", pointer)
    return value


# ---------------------------------------------------------------- scenes and cameras

def load_scene(path: PathLike) -> Scene:
    """
    Scene JSON: {"objects": [{"instance_id", "class_id", "mesh", "pose", "keypoints"?}],
    "tote": {"mesh", "pose"} | null, "gravity": [3 floats]}. Mesh paths are resolved
    relative to the scene file.
    """
    path = Path(path)
    data = read_json(path)
    base = path.parent
    cache: Dict[Path, TriMesh] = {}

    def mesh_at(value, pointer: str) -> TriMesh:
        if not isinstance(value, str):
            raise SchemaError("mesh must be a file path", pointer)
        mesh_path = (base / value).resolve()
        if mesh_path not in cache:
            cache[mesh_path] = load_mesh(mesh_path)
        return cache[mesh_path]

    entries = _require(data, "objects", "")
    if not isinstance(entries, list):
        raise SchemaError("objects must be an array", "/objects")
    objects = []
    for i, entry in enumerate(entries):
        p = f"/objects/{i}"
        instance_id = _number(_require(entry, "instance_id", p), f"{p}/instance_id", integer=True)
        class_id = _number(_require(entry, "class_id", p), f"{p}/class_id", integer=True)
        if not 1 <= instance_id <= 65535:
            raise SchemaError("instance_id must lie in [1, 65535]", f"{p}/instance_id")
        mesh_ref = _require(entry, "mesh", p)
        pose = _pose(_require(entry, "pose", p), f"{p}/pose")
        keypoints = entry.get("keypoints")
        if keypoints is not None:
            try:
                keypoints = np.asarray(keypoints, dtype=float).reshape(-1, 3)
            except (TypeError, ValueError) as exc:
                raise SchemaError("keypoints must be a list of 3D points", f"{p}/keypoints") from exc
        objects.append(SceneObject(instance_id, class_id, mesh_at(mesh_ref, f"{p}/mesh"), pose, mesh_ref, keypoints))
    if len({o.instance_id for o in objects}) != len(objects):
        raise SchemaError("instance ids must be unique", "/objects")

    tote, tote_pose = None, RigidTransform.identity()
    if data.get("tote") is not None:
        tote = mesh_at(_require(data["tote"], "mesh", "/tote"), "/tote/mesh")
        tote_pose = _pose(data["tote"].get("pose", RigidTransform.identity().to_list()), "/tote/pose")

    gravity = data.get("gravity", [0.0, 0.0, -9.81])
    if not (isinstance(gravity, list) and len(gravity) == 3):
        raise SchemaError("gravity must be 3 numbers", "/gravity")
    gravity = [_number(g, f"/gravity/{k}") for k, g in enumerate(gravity)]
    return Scene(tuple(objects), tote, tote_pose, np.array(gravity, dtype=float))


def load_camera(path: PathLike) -> Camera:
    """Camera JSON: {"width", "height", "fx", "fy", "cx", "cy", "pose", "near"?, "far"?}."""
    data = read_json(path)
    values = {}
    for key in ("width", "height"):
        values[key] = _number(_require(data, key, ""), f"/{key}", integer=True)
    for key in ("fx", "fy", "cx", "cy"):
        values[key] = float(_number(_require(data, key, ""), f"/{key}"))
    for key in ("near", "far"):
        if key in data:
            values[key] = float(_number(data[key], f"/{key}"))
    values["pose"] = _pose(_require(data, "pose", ""), "/pose")
    try:
        return Camera(**values)
    except ValueError as exc:
        raise SchemaError(str(exc), "") from exc


# ---------------------------------------------------------------- images

def write_pgm16(path: PathLike, image: np.ndarray) -> Path:
    """Binary PGM (P5), maxval 65535, big-endian samples."""
    image = np.asarray(image)
    h, w = image.shape
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(image.astype(">u2").tobytes())
    return path


def read_pgm16(path: PathLike) -> np.ndarray:
    raw = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos].decode("ascii"))
    if tokens[0] != "P5":
        raise ParseError("not a binary PGM", str(path), 1)
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(raw[pos + 1:], dtype=dtype, count=w * h).reshape(h, w).astype(np.uint16)


def write_pfm(path: PathLike, image: np.ndarray) -> Path:
    """Grayscale PFM ("Pf"), scale -1.0 (little-endian), rows stored bottom to top."""
    image = np.asarray(image, dtype="<f4")
    h, w = image.shape
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(f"Pf\n{w} {h}\n-1.0\n".encode("ascii"))
        fh.write(np.flipud(image).tobytes())
    return path


def read_pfm(path: PathLike) -> np.ndarray:
    with Path(path).open("rb") as fh:
        if fh.readline().strip() != b"Pf":
            raise ParseError("not a grayscale PFM", str(path), 1)
        w, h = (int(v) for v in fh.readline().split())
        scale = float(fh.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(fh.read(), dtype=dtype, count=w * h)
    return np.flipud(data.reshape(h, w)).astype(np.float32)


# ---------------------------------------------------------------- grasp labels

def write_grasp_labels(path: PathLike, labels: Sequence[GraspLabel], extra: Optional[dict] = None) -> Path:
    document = {"grasps": [label.to_dict() for label in labels]}
    if extra:
        document.update(extra)
    return write_json(path, document)


def read_grasp_labels(path: PathLike) -> List[GraspLabel]:
    data = read_json(path)
    entries = data.get("grasps") if isinstance(data, dict) else data
    if not isinstance(entries, list):
        raise SchemaError("expected an array of grasps", "/grasps")
    return [GraspLabel.from_dict(entry, f"/grasps/{i}") for i, entry in enumerate(entries)]


# ---------------------------------------------------------------- measurements

@dataclass(frozen=True)
class MeasurementRow:
    row: int
    mesh: str
    contact: np.ndarray
    approach: np.ndarray
    label: bool
    tearoff: Optional[float]


def read_measurements(path: PathLike) -> List[MeasurementRow]:
    """
    Seal measurement CSV with header
    mesh,contact_x,contact_y,contact_z,approach_x,approach_y,approach_z,label,tearoff_n.
    Row numbers in errors count the header as row 1.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=True)
    except pd.errors.EmptyDataError as exc:
        raise EmptyRecordSet(f"{path}: no measurements.") from exc
    except pd.errors.ParserError as exc:
        raise ParseError(f"malformed CSV: {exc}", str(path)) from exc
    missing = [c for c in MEASUREMENT_COLUMNS if c not in frame.columns and c != "tearoff_n"]
    if missing:
        raise SchemaError(f"missing column(s): {', '.join(missing)}", "/columns")
    if frame.empty:
        raise EmptyRecordSet(f"{path}: no measurements.")

    rows = []
    for i, record in enumerate(frame.to_dict("records")):
        row = i + 2
        values = [to_float(record[c], None) for c in MEASUREMENT_COLUMNS[1:7]]
        if any(v is None for v in values):
            raise RecordError(f"{path}: non-numeric contact or approach value", row)
        label = record["label"].strip()
        if label not in ("0", "1"):
            raise RecordError(f"{path}: label must be 0 or 1, got {label!r}", row)
        if not record["mesh"].strip():
            raise RecordError(f"{path}: empty mesh path", row)
        approach = np.array(values[3:6])
        norm = np.linalg.norm(approach)
        if norm <= 0:
            raise RecordError(f"{path}: zero approach direction", row)
        raw_tearoff = record.get("tearoff_n", "")
        tearoff = to_float(raw_tearoff, None)
        if raw_tearoff.strip() and tearoff is None:
            raise RecordError(f"{path}: non-numeric tearoff_n {raw_tearoff!r}", row)
        rows.append(MeasurementRow(row, record["mesh"].strip(), np.array(values[:3]), approach / norm,
                                   label == "1", tearoff))
    logger.info("Read %d measurements from %s.", len(rows), path)
    return rows


def write_measurements(path: PathLike, rows: Sequence[MeasurementRow]) -> Path:
    frame = pd.DataFrame([{
        "mesh": r.mesh,
        "contact_x": r.contact[0], "contact_y": r.contact[1], "contact_z": r.contact[2],
        "approach_x": r.approach[0], "approach_y": r.approach[1], "approach_z": r.approach[2],
        "label": int(r.label), "tearoff_n": "" if r.tearoff is None else r.tearoff,
    } for r in rows], columns=list(MEASUREMENT_COLUMNS))
    frame.to_csv(path, index=False, float_format="%.9g")
    return Path(path)
