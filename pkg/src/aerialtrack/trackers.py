"""
Online tracking-by-detection.

Two association modes share one lifecycle:

* ``euclidean`` -- Euclidean Online Tracking (EOT): Kalman-predicted centers
  are compared with detection centers in meters and gated (default 17 * GSD).
* ``iou`` -- SORT-style: predicted boxes are compared with detection boxes by
  1 - IoU, optionally after enlarging both.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .assignment import euclidean_cost_matrix, gate, solve_assignment
from .core import BoundingBox, Detection, ObjectId, Point, SequenceMeta, boxes_to_array, iou_matrix
from .motion import (KalmanState, MotionNoiseConfig, kalman_init, kalman_predict_many,
                     kalman_update_many)

log = logging.getLogger(__name__)

EOT_GATE_PX = 17.0
DEFAULT_IOU_GATE = 0.5
HISTORY_LEN = 5

Trajectories = Dict[ObjectId, Dict[int, BoundingBox]]


@dataclass(frozen=True)
class TrackerConfig:
    """Tracker settings.

    ``gate_threshold`` is in meters for the euclidean mode (None means
    17 * GSD) and a 1 - IoU cost in [0, 1] for the iou mode (None means 0.5).
    """

    mode: str = "euclidean"
    gate_threshold: Optional[float] = None
    max_age: int = 3
    box_enlarge_factor: float = 1.0
    gsd: Optional[float] = None
    require_prev_match: bool = True
    spawn_new_tracks: bool = True
    noise: MotionNoiseConfig = field(default_factory=MotionNoiseConfig)

    def __post_init__(self):
        if self.mode not in ("euclidean", "iou"):
            raise ValueError(f"unknown tracker mode {self.mode!r}; expected 'euclidean' or 'iou'")
        if self.gate_threshold is not None and self.gate_threshold < 0:
            raise ValueError(f"gate_threshold must be non-negative, got {self.gate_threshold}")
        if self.max_age < 0:
            raise ValueError(f"max_age must be non-negative, got {self.max_age}")
        if not self.box_enlarge_factor > 0:
            raise ValueError(f"box_enlarge_factor must be positive, got {self.box_enlarge_factor}")
        if self.gsd is not None and not self.gsd > 0:
            raise ValueError(f"gsd must be positive, got {self.gsd}")

    def resolved(self, meta: SequenceMeta) -> "TrackerConfig":
        """Fill in the GSD and the default gate from sequence metadata."""
        gsd = self.gsd if self.gsd is not None else meta.gsd
        thr = self.gate_threshold
        if thr is None:
            thr = EOT_GATE_PX * gsd if self.mode == "euclidean" else DEFAULT_IOU_GATE
        return dataclasses.replace(self, gsd=gsd, gate_threshold=thr)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class TrackState:
    id: ObjectId
    kalman: KalmanState
    box: BoundingBox
    born: int
    age: int = 0
    history: List[Point] = field(default_factory=list)
    last_positions: List[Point] = field(default_factory=list)

    @property
    def center(self) -> Point:
        return self.kalman.position

    def current_box(self) -> BoundingBox:
        cx, cy = self.center
        return BoundingBox.from_center(cx, cy, self.box.width, self.box.height)


@dataclass(frozen=True)
class TrackingResult:
    trajectories: Trajectories
    meta: SequenceMeta
    config: dict


class Tracker:
    def __init__(self, cfg: TrackerConfig, meta: SequenceMeta):
        self.cfg = cfg.resolved(meta)
        self.meta = meta
        self.frame = -1
        self.tracks: List[TrackState] = []
        self._next_id = 1
        self._trajectories: Trajectories = {}
        # (frame, track id, detection index, pre-gate cost) for every match made
        self.match_log: List[Tuple[int, ObjectId, int, float]] = []

    @property
    def gate_threshold(self) -> float:
        return self.cfg.gate_threshold

    def _spawn(self, frame: int, det: Detection) -> TrackState:
        cx, cy = det.box.center
        t = TrackState(id=self._next_id, kalman=kalman_init((cx, cy), self.cfg.noise),
                       box=det.box, born=frame, last_positions=[(cx, cy)])
        self._next_id += 1
        self.tracks.append(t)
        return t

    def _cost_matrix(self, centers: np.ndarray, sizes: np.ndarray,
                     dets: Sequence[Detection]) -> np.ndarray:
        det_arr = boxes_to_array([d.box for d in dets])
        det_centers = (det_arr[:, :2] + det_arr[:, 2:]) / 2.0
        if self.cfg.mode == "euclidean":
            return euclidean_cost_matrix(centers, det_centers, self.cfg.gsd)
        f = self.cfg.box_enlarge_factor
        half_t = sizes * f / 2.0
        half_d = (det_arr[:, 2:] - det_arr[:, :2]) * f / 2.0
        track_arr = np.hstack([centers - half_t, centers + half_t])
        det_arr = np.hstack([det_centers - half_d, det_centers + half_d])
        return 1.0 - iou_matrix(track_arr, det_arr)

    def step(self, frame: int, detections: Sequence[Detection]) -> List[Tuple[ObjectId, BoundingBox]]:
        if frame <= self.frame:
            raise ValueError(f"frame {frame} is not after the previously stepped frame {self.frame}")
        for d in detections:
            if d.frame != frame:
                raise ValueError(f"detection for frame {d.frame} passed to frame {frame}")
        elapsed = frame - self.frame if self.frame >= 0 else 1
        self.frame = frame
        cfg = self.cfg
        tracks = self.tracks

        means = np.array([t.kalman.mean for t in tracks]).reshape(-1, 4)
        covs = np.array([t.kalman.covariance for t in tracks]).reshape(-1, 4, 4)
        for _ in range(elapsed):
            means, covs = kalman_predict_many(means, covs, cfg.noise)

        if cfg.mode == "euclidean" and cfg.require_prev_match:
            cand = [i for i, t in enumerate(tracks) if t.age == 0]
        else:
            cand = list(range(len(tracks)))
        sizes = np.array([(tracks[i].box.width, tracks[i].box.height) for i in cand]).reshape(-1, 2)
        raw = self._cost_matrix(means[cand, :2], sizes, detections)
        result = solve_assignment(gate(raw, cfg.gate_threshold))

        rows = [cand[r] for r, _ in result.pairs]
        cols = [c for _, c in result.pairs]
        if rows:
            obs = np.array([detections[c].box.center for c in cols])
            means[rows], covs[rows] = kalman_update_many(means[rows], covs[rows], obs, cfg.noise)
        for (r, c), i in zip(result.pairs, rows):
            self.match_log.append((frame, tracks[i].id, c, float(raw[r, c])))

        matched = set(rows)
        survivors = []
        for i, t in enumerate(tracks):
            t.kalman = KalmanState(means[i], covs[i])
            if i in matched:
                t.age = 0
            else:
                t.age += elapsed  # coasting: prediction only
            prev, cur = t.last_positions[-1], t.center
            t.history.append((cur[0] - prev[0], cur[1] - prev[1]))
            del t.history[:-HISTORY_LEN]
            t.last_positions.append(cur)
            del t.last_positions[:-(HISTORY_LEN + 1)]
            if t.age > cfg.max_age or not self.meta.contains(cur):
                log.debug("frame %d: removing track %d (age %d)", frame, t.id, t.age)
                continue
            survivors.append(t)
        self.tracks = survivors

        if cfg.spawn_new_tracks or frame == 0:
            for c in result.unmatched_cols:
                self._spawn(frame, detections[c])

        out = []
        for t in self.tracks:
            box = t.box if t.born == frame else t.current_box()
            out.append((t.id, box))
            self._trajectories.setdefault(t.id, {})[frame] = box
        return out

    def finalize(self) -> TrackingResult:
        trajs = {tid: dict(sorted(boxes.items())) for tid, boxes in sorted(self._trajectories.items())}
        return TrackingResult(trajectories=trajs, meta=self.meta, config=self.cfg.to_dict())


def tracker_new(cfg: TrackerConfig, meta: SequenceMeta) -> Tracker:
    return Tracker(cfg, meta)


def track_sequence(cfg: TrackerConfig, meta: SequenceMeta,
                   detections_by_frame: Dict[int, Sequence[Detection]],
                   n_frames: Optional[int] = None) -> TrackingResult:
    """Run a tracker over every frame in ``[0, n_frames)`` (default: up to the last detection)."""
    tracker = Tracker(cfg, meta)
    if n_frames is None:
        n_frames = max(detections_by_frame, default=-1) + 1
    for f in range(n_frames):
        tracker.step(f, detections_by_frame.get(f, []))
    return tracker.finalize()
