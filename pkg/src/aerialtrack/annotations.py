"""
Annotation CSV files.

Layout::

    # {"frame_rate": 2.0, "gsd": 0.12, "height": 1000, "name": "seq", "width": 1000}
    frame,id,x1,y1,x2,y2
    0,1,8.0000,8.0000,12.0000,12.0000
    ...

The first line is a comment holding the sequence metadata as JSON. Rows are
sorted by (frame, id); id -1 marks an anonymous raw detection and may repeat
within a frame. A row with x1 == x2 and y1 == y2 is a point annotation and
is expanded to a small square box centered on the point.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence

from .core import BoundingBox, Detection, ObjectId, SequenceMeta

COLUMNS = ("frame", "id", "x1", "y1", "x2", "y2")
META_FIELDS = ("gsd", "frame_rate", "width", "height", "name")
DETECTION_ID = -1

# point annotations become 4 px squares at fine GSDs and 5 px squares above
POINT_BOX_GSD_LIMIT = 0.14


class AnnotationError(ValueError):
    """Malformed annotation text; the message names the offending line."""


@dataclass(frozen=True)
class AnnotationRow:
    frame: int
    id: ObjectId
    box: BoundingBox


@dataclass
class AnnotationFile:
    meta: SequenceMeta
    rows: List[AnnotationRow]
    warnings: List[str] = field(default_factory=list)

    @property
    def n_frames(self) -> int:
        return max((r.frame for r in self.rows), default=-1) + 1


def point_box_side(gsd: float) -> float:
    return 4.0 if gsd <= POINT_BOX_GSD_LIMIT else 5.0


def _parse_meta(line: str) -> SequenceMeta:
    if not line.startswith("#"):
        raise AnnotationError("line 1: expected a '# {...}' metadata header")
    try:
        raw = json.loads(line[1:])
    except json.JSONDecodeError as e:
        raise AnnotationError(f"line 1: metadata header is not valid JSON ({e.msg})") from None
    if not isinstance(raw, dict):
        raise AnnotationError("line 1: metadata header must be a JSON object")
    missing = [k for k in META_FIELDS if k not in raw]
    if missing:
        raise AnnotationError(f"line 1: missing header fields {missing}")
    unknown = sorted(set(raw) - set(META_FIELDS))
    if unknown:
        raise AnnotationError(f"line 1: unknown header fields {unknown}")
    try:
        return SequenceMeta(gsd=float(raw["gsd"]), frame_rate=float(raw["frame_rate"]),
                            width=int(raw["width"]), height=int(raw["height"]),
                            name=str(raw["name"]))
    except (TypeError, ValueError) as e:
        raise AnnotationError(f"line 1: {e}") from None


def _parse_int(cell: str, lineno: int, name: str) -> int:
    try:
        return int(cell)
    except ValueError:
        raise AnnotationError(f"line {lineno}: non-numeric {name} {cell!r}") from None


def _parse_float(cell: str, lineno: int, name: str) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise AnnotationError(f"line {lineno}: non-numeric {name} {cell!r}") from None
    if not math.isfinite(v):
        raise AnnotationError(f"line {lineno}: {name} must be finite, got {cell!r}")
    return v


def parse_annotations(text: str) -> AnnotationFile:
    lines = text.splitlines()
    if not lines:
        raise AnnotationError("line 1: empty file, expected a metadata header")
    meta = _parse_meta(lines[0])
    if len(lines) < 2 or tuple(c.strip() for c in lines[1].split(",")) != COLUMNS:
        raise AnnotationError(f"line 2: expected column header {','.join(COLUMNS)!r}")

    side = point_box_side(meta.gsd)
    rows: List[AnnotationRow] = []
    warnings: List[str] = []
    prev_key = None
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(COLUMNS):
            raise AnnotationError(f"line {lineno}: expected {len(COLUMNS)} fields, got {len(cells)}")
        frame = _parse_int(cells[0], lineno, "frame")
        oid = _parse_int(cells[1], lineno, "id")
        x1, y1, x2, y2 = (_parse_float(c, lineno, n) for c, n in zip(cells[2:], COLUMNS[2:]))
        if frame < 0:
            raise AnnotationError(f"line {lineno}: frame must be non-negative, got {frame}")
        if oid < DETECTION_ID:
            raise AnnotationError(f"line {lineno}: id must be >= -1, got {oid}")

        key = (frame, oid)
        if prev_key is not None:
            if frame < prev_key[0]:
                raise AnnotationError(f"line {lineno}: frames not sorted ({frame} after {prev_key[0]})")
            if key < prev_key or (key == prev_key and oid != DETECTION_ID):
                raise AnnotationError(f"line {lineno}: rows not sorted by (frame, id) at id {oid}")
        prev_key = key

        if x1 == x2 and y1 == y2:
            box = BoundingBox.from_center(x1, y1, side, side)
        else:
            try:
                box = BoundingBox(x1, y1, x2, y2)
            except ValueError as e:
                raise AnnotationError(f"line {lineno}: {e}") from None
        if box.x1 < 0 or box.y1 < 0 or box.x2 > meta.width or box.y2 > meta.height:
            warnings.append(f"line {lineno}: box {box.as_tuple()} extends outside the "
                            f"{meta.width}x{meta.height} image")
        rows.append(AnnotationRow(frame, oid, box))
    return AnnotationFile(meta=meta, rows=rows, warnings=warnings)


def format_meta(meta: SequenceMeta) -> str:
    d = {"gsd": meta.gsd, "frame_rate": meta.frame_rate, "width": meta.width,
         "height": meta.height, "name": meta.name}
    return "# " + json.dumps(d, sort_keys=True)


def write_annotations(af: AnnotationFile) -> str:
    rows = sorted(af.rows, key=lambda r: (r.frame, r.id))
    out = [format_meta(af.meta), ",".join(COLUMNS)]
    for r in rows:
        b = r.box
        out.append(f"{r.frame},{r.id},{b.x1:.4f},{b.y1:.4f},{b.x2:.4f},{b.y2:.4f}")
    return "\n".join(out) + "\n"


def write_text_atomic(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename over the target."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_annotations(path) -> AnnotationFile:
    with open(path, encoding="utf-8") as f:
        text = f.read()
    try:
        return parse_annotations(text)
    except AnnotationError as e:
        raise AnnotationError(f"{path}: {e}") from None


def save_annotations(path, af: AnnotationFile) -> None:
    write_text_atomic(path, write_annotations(af))


# -- conversions ------------------------------------------------------------

def from_trajectories(meta: SequenceMeta,
                      trajs: Mapping[ObjectId, Mapping[int, BoundingBox]]) -> AnnotationFile:
    rows = [AnnotationRow(f, oid, box) for oid, boxes in trajs.items() for f, box in boxes.items()]
    rows.sort(key=lambda r: (r.frame, r.id))
    return AnnotationFile(meta=meta, rows=rows)


def from_detections(meta: SequenceMeta,
                    detections: Mapping[int, Sequence[Detection]]) -> AnnotationFile:
    rows = [AnnotationRow(f, DETECTION_ID, d.box)
            for f in sorted(detections) for d in detections[f]]
    return AnnotationFile(meta=meta, rows=rows)


def to_trajectories(af: AnnotationFile) -> Dict[ObjectId, Dict[int, BoundingBox]]:
    out: Dict[ObjectId, Dict[int, BoundingBox]] = {}
    for r in af.rows:
        if r.id == DETECTION_ID:
            raise AnnotationError(f"frame {r.frame}: anonymous detection row (id -1) "
                                  "in a trajectory file")
        out.setdefault(r.id, {})[r.frame] = r.box
    return out


def to_detections(af: AnnotationFile) -> Dict[int, List[Detection]]:
    """Every row becomes a detection; ids, if any, are ignored."""
    out: Dict[int, List[Detection]] = {}
    for r in af.rows:
        out.setdefault(r.frame, []).append(Detection(frame=r.frame, box=r.box))
    return out

