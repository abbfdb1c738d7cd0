"""Box geometry and the small value types shared by every other module."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

Point = Tuple[float, float]
ObjectId = int


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in continuous pixel coordinates (origin top-left)."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        # a NaN or infinity in any coordinate poisons the sum
        if not math.isfinite(self.x1 + self.y1 + self.x2 + self.y2):
            raise ValueError(f"box coordinates must be finite, got {self.as_tuple()}")
        if self.x2 < self.x1 or self.y2 < self.y1:
            raise ValueError(f"box corners out of order: {self.as_tuple()}")

    @classmethod
    def from_center(cls, cx: float, cy: float, w: float, h: float) -> "BoundingBox":
        return cls(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> Point:
        return ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class Detection:
    frame: int
    box: BoundingBox
    confidence: Optional[float] = None

    def __post_init__(self):
        if self.frame < 0:
            raise ValueError(f"frame index must be non-negative, got {self.frame}")
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must lie in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class SequenceMeta:
    """Per-sequence acquisition metadata. ``gsd`` is in meters per pixel."""

    gsd: float
    frame_rate: float = 2.0
    width: int = 1000
    height: int = 1000
    name: str = "seq"

    def __post_init__(self):
        if not self.gsd > 0:
            raise ValueError(f"gsd must be positive, got {self.gsd}")
        if not self.frame_rate > 0:
            raise ValueError(f"frame_rate must be positive, got {self.frame_rate}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")

    def contains(self, point: Point) -> bool:
        x, y = point
        return 0.0 <= x < self.width and 0.0 <= y < self.height


def iou(a: BoundingBox, b: BoundingBox) -> float:
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


def boxes_to_array(boxes: Sequence[BoundingBox]) -> np.ndarray:
    return np.array([b.as_tuple() for b in boxes], dtype=float).reshape(-1, 4)


def iou_matrix(a, b) -> np.ndarray:
    """Pairwise IoU between two box collections (sequences of boxes or (n, 4) arrays)."""
    a = a if isinstance(a, np.ndarray) else boxes_to_array(a)
    b = b if isinstance(b, np.ndarray) else boxes_to_array(b)
    iw = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.where((iw > 0) & (ih > 0), iw * ih, 0.0)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)
    return out


def enlarge(box: BoundingBox, factor: float) -> BoundingBox:
    """Scale a box about its center by ``factor`` in both dimensions."""
    if not factor > 0:
        raise ValueError(f"enlarge factor must be positive, got {factor}")
    cx, cy = box.center
    return BoundingBox.from_center(cx, cy, box.width * factor, box.height * factor)


def center_distance_m(a: BoundingBox, b: BoundingBox, gsd: float) -> float:
    if not gsd > 0:
        raise ValueError(f"gsd must be positive, got {gsd}")
    (ax, ay), (bx, by) = a.center, b.center
    return gsd * math.hypot(ax - bx, ay - by)
