"""Multi-object tracking for aerial image sequences.

Trackers (Euclidean-gated EOT and IoU-gated), a gated Hungarian solver,
CLEAR-MOT and identity metrics, a synthetic scenario generator and the
feature builders used by graph-based trackers.
"""

from .assignment import Assignment, INFEASIBLE, solve_assignment
from .core import BoundingBox, Detection, SequenceMeta, iou
from .metrics import MatchCriterion, MetricsReport, evaluate_sequence, summarize
from .simulator import NoiseConfig, ScenarioConfig, corrupt, preset, simulate
from .trackers import Tracker, TrackerConfig, track_sequence

__all__ = [
    "Assignment", "INFEASIBLE", "solve_assignment",
    "BoundingBox", "Detection", "SequenceMeta", "iou",
    "MatchCriterion", "MetricsReport", "evaluate_sequence", "summarize",
    "NoiseConfig", "ScenarioConfig", "corrupt", "preset", "simulate",
    "Tracker", "TrackerConfig", "track_sequence",
]
