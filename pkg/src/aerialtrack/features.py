"""
Geometry fed to graph-based tracking networks: neighbor graphs, movement
histories, search-patch placement, and the regression losses.

Everything here is a pure function of positions; no network is evaluated.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .core import BoundingBox, Point

N_NEIGHBORS = 8
GRAPH_HISTORY = 5
MOVEMENT_HISTORY = 5
NETWORK_INPUT_SIDE = 227
DEFAULT_RADIUS_M = 7.5


@dataclass(frozen=True)
class NeighborGraph:
    target: Point
    vectors: Tuple[Point, ...]  # 8 slots, neighbor -> target, zero-padded
    n_neighbors: int

    def flatten(self) -> np.ndarray:
        """``[x, y, x_v1, y_v1, ..., x_v8, y_v8]``"""
        out = np.zeros(2 + 2 * N_NEIGHBORS)
        out[:2] = self.target
        out[2:] = np.asarray(self.vectors, dtype=float).ravel()
        return out


def neighbor_graph(target: Point, others: Sequence[Point], gsd: float,
                   radius_m: float = DEFAULT_RADIUS_M) -> NeighborGraph:
    if not gsd > 0:
        raise ValueError(f"gsd must be positive, got {gsd}")
    radius_px = radius_m / gsd
    tx, ty = target
    cands = []
    for idx, (ox, oy) in enumerate(others):
        d = math.hypot(tx - ox, ty - oy)
        if d <= radius_px:
            cands.append((d, idx, (tx - ox, ty - oy)))
    cands.sort(key=lambda c: (c[0], c[1]))
    chosen = [v for _, _, v in cands[:N_NEIGHBORS]]
    vectors = chosen + [(0.0, 0.0)] * (N_NEIGHBORS - len(chosen))
    return NeighborGraph(target=(float(tx), float(ty)), vectors=tuple(vectors),
                         n_neighbors=len(chosen))


def graph_history(graphs: Sequence[NeighborGraph]) -> np.ndarray:
    """Stack up to five graphs (oldest first) into the 18 x 5 input matrix."""
    if len(graphs) > GRAPH_HISTORY:
        raise ValueError(f"at most {GRAPH_HISTORY} graphs, got {len(graphs)}")
    out = np.zeros((2 + 2 * N_NEIGHBORS, GRAPH_HISTORY))
    for col, g in enumerate(graphs):
        out[:, col] = g.flatten()
    return out


def movement_history(positions: Sequence[Point]) -> List[Point]:
    """Last five movement vectors, oldest first, left-padded with zeros."""
    recent = [tuple(map(float, p)) for p in positions[-(MOVEMENT_HISTORY + 1):]]
    diffs = [(b[0] - a[0], b[1] - a[1]) for a, b in zip(recent, recent[1:])]
    return [(0.0, 0.0)] * (MOVEMENT_HISTORY - len(diffs)) + diffs


@dataclass(frozen=True)
class PatchGeometry:
    box: BoundingBox  # square patch in image coordinates
    side: float
    scale: float  # network px per image px
    input_side: int = NETWORK_INPUT_SIDE


def patch_geometry(box: BoundingBox, context_factor: float,
                   input_side: int = NETWORK_INPUT_SIDE) -> PatchGeometry:
    if not context_factor > 0:
        raise ValueError(f"context factor must be positive, got {context_factor}")
    if box.width <= 0 or box.height <= 0:
        raise ValueError("patch needs a box with positive width and height")
    side = max(box.width, box.height) * context_factor
    cx, cy = box.center
    return PatchGeometry(box=BoundingBox.from_center(cx, cy, side, side), side=side,
                         scale=input_side / side, input_side=input_side)


def patch_to_image(pt: Point, g: PatchGeometry) -> Point:
    return (g.box.x1 + pt[0] / g.scale, g.box.y1 + pt[1] / g.scale)


def image_to_patch(pt: Point, g: PatchGeometry) -> Point:
    return ((pt[0] - g.box.x1) * g.scale, (pt[1] - g.box.y1) * g.scale)


def loss(kind: str, x, x_hat) -> float:
    x = np.asarray(x, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x.shape != x_hat.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {x_hat.shape}")
    e = np.abs(x - x_hat)
    if kind == "l1":
        return float(e.sum())
    if kind == "l2":
        return float((e ** 2).sum())
    if kind == "huber":
        z = np.where(e < 1.0, 0.5 * e ** 2, e - 0.5)
        return float(z.sum())
    raise ValueError(f"unknown loss {kind!r}; expected l1, l2 or huber")


def write_graph_history_csv(path, rows: Iterable[Tuple[int, int, np.ndarray]]) -> None:
    """One line per (frame, object): the 18 x 5 matrix flattened column by column."""
    header = ["frame", "id"] + [f"g{t}_{k}" for t in range(GRAPH_HISTORY)
                                for k in range(2 + 2 * N_NEIGHBORS)]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for frame, oid, mat in rows:
            w.writerow([frame, oid] + [repr(float(v)) for v in np.asarray(mat).T.ravel()])


def write_movement_history_csv(path, rows: Iterable[Tuple[int, int, Sequence[Point]]]) -> None:
    header = ["frame", "id"] + [f"{a}{t}" for t in range(MOVEMENT_HISTORY) for a in ("dx", "dy")]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for frame, oid, hist in rows:
            w.writerow([frame, oid] + [repr(float(v)) for vec in hist for v in vec])
