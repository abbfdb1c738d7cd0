"""
CLEAR-MOT and identity metrics.

A ``MetricsAccumulator`` collects per-frame tallies for one sequence (or a
merge of several); ``summarize`` turns it into a ``MetricsReport``. Ratios
that are undefined for the accumulated data are reported as ``None``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .assignment import INFEASIBLE, solve_assignment
from .core import BoundingBox, ObjectId, boxes_to_array, iou, iou_matrix

FrameBoxes = Mapping[ObjectId, BoundingBox]
Trajectories = Mapping[ObjectId, Mapping[int, BoundingBox]]

MT_THRESHOLD = 0.8
ML_THRESHOLD = 0.2


@dataclass(frozen=True)
class MatchCriterion:
    """``iou``: match iff IoU > threshold. ``distance``: match iff center distance <= threshold px."""

    kind: str = "iou"
    threshold: float = 0.5

    def __post_init__(self):
        if self.kind not in ("iou", "distance"):
            raise ValueError(f"unknown match criterion {self.kind!r}")
        if self.threshold < 0:
            raise ValueError("criterion threshold must be non-negative")

    def cost(self, g: BoundingBox, p: BoundingBox) -> float:
        if self.kind == "iou":
            ov = iou(g, p)
            return 1.0 - ov if ov > self.threshold else INFEASIBLE
        d = _center_px(g, p)
        return d if d <= self.threshold else INFEASIBLE

    def accepts(self, g: BoundingBox, p: BoundingBox) -> bool:
        return math.isfinite(self.cost(g, p))

    def cost_matrix(self, gt_boxes: Sequence[BoundingBox],
                    pred_boxes: Sequence[BoundingBox]) -> np.ndarray:
        """Vectorized ``cost`` over all (gt, pred) pairs."""
        if self.kind == "iou":
            ov = iou_matrix(gt_boxes, pred_boxes)
            return np.where(ov > self.threshold, 1.0 - ov, INFEASIBLE)
        g = boxes_to_array(gt_boxes)
        p = boxes_to_array(pred_boxes)
        gc = (g[:, :2] + g[:, 2:]) / 2.0
        pc = (p[:, :2] + p[:, 2:]) / 2.0
        d = np.hypot(gc[:, None, 0] - pc[None, :, 0], gc[:, None, 1] - pc[None, :, 1])
        return np.where(d <= self.threshold, d, INFEASIBLE)


def _center_px(a: BoundingBox, b: BoundingBox) -> float:
    (ax, ay), (bx, by) = a.center, b.center
    return math.hypot(ax - bx, ay - by)


@dataclass(frozen=True)
class FrameMatch:
    frame: int
    pairs: Tuple[Tuple[ObjectId, ObjectId, float, float], ...]  # (gt, pred, iou, center px)
    fp: int
    fn: int
    ids_events: int


@dataclass(frozen=True)
class FrameTally:
    frame: int
    gt: int
    tp: int
    fp: int
    fn: int
    ids: int
    overlap_sum: float
    distance_sum: float


@dataclass
class Coverage:
    present: int = 0
    tracked: int = 0
    fragments: int = 0
    ever_tracked: bool = False
    in_gap: bool = False


@dataclass(frozen=True)
class IdCounts:
    idtp: int
    idfp: int
    idfn: int


@dataclass
class MetricsAccumulator:
    """Event tallies for one sequence.

    ``ids_mode`` selects what an identity switch is compared against:
    ``last_known`` (the most recent assignment of the object, also across
    gaps) or ``previous_frame`` (only a match in the immediately preceding
    frame counts).
    """

    name: str = "seq"
    ids_mode: str = "last_known"
    tallies: List[FrameTally] = field(default_factory=list)
    coverage: Dict[Hashable, Coverage] = field(default_factory=dict)
    id_counts: Optional[IdCounts] = None
    last_known: Dict[ObjectId, ObjectId] = field(default_factory=dict)
    prev_frame: Dict[ObjectId, ObjectId] = field(default_factory=dict)
    last_frame: Optional[int] = None

    def __post_init__(self):
        if self.ids_mode not in ("last_known", "previous_frame"):
            raise ValueError(f"unknown ids_mode {self.ids_mode!r}")

    @property
    def n_frames(self) -> int:
        return len(self.tallies)

    def totals(self) -> Dict[str, int]:
        keys = ("gt", "tp", "fp", "fn", "ids")
        return {k: sum(getattr(t, k) for t in self.tallies) for k in keys}


@dataclass(frozen=True)
class MetricsReport:
    MOTA: Optional[float]
    MOTAL: Optional[float]
    MOTP: Optional[float]
    FAR: Optional[float]
    Rcll: Optional[float]
    Prcn: Optional[float]
    IDF1: Optional[float]
    IDP: Optional[float]
    IDR: Optional[float]
    IDS: int
    FM: int
    FP: int
    FN: int
    MT: Optional[float]
    PT: Optional[float]
    ML: Optional[float]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def match_frame(acc: MetricsAccumulator, frame: int, gt: FrameBoxes, pred: FrameBoxes,
                criterion: MatchCriterion = MatchCriterion()) -> FrameMatch:
    if acc.last_frame is not None and frame <= acc.last_frame:
        raise ValueError(f"frame {frame} does not follow accumulated frame {acc.last_frame}")
    acc.last_frame = frame
    reference = acc.last_known if acc.ids_mode == "last_known" else acc.prev_frame

    pairs: List[Tuple[ObjectId, ObjectId]] = []
    used_pred = set()
    # keep still-valid correspondences before solving the rest
    for g in sorted(gt):
        p = reference.get(g)
        if p is not None and p in pred and p not in used_pred and criterion.accepts(gt[g], pred[p]):
            pairs.append((g, p))
            used_pred.add(p)

    kept_gt = {g for g, _ in pairs}
    rest_gt = [g for g in sorted(gt) if g not in kept_gt]
    rest_pred = [p for p in sorted(pred) if p not in used_pred]
    if rest_gt and rest_pred:
        cost = criterion.cost_matrix([gt[g] for g in rest_gt], [pred[p] for p in rest_pred])
        for r, c in solve_assignment(cost).pairs:
            pairs.append((rest_gt[r], rest_pred[c]))

    ids = 0
    detailed = []
    for g, p in sorted(pairs):
        ref = reference.get(g)
        if ref is not None and ref != p:
            ids += 1
        detailed.append((g, p, iou(gt[g], pred[p]), _center_px(gt[g], pred[p])))

    matched = dict(pairs)
    acc.last_known.update(matched)
    acc.prev_frame = matched

    for g in gt:
        cov = acc.coverage.setdefault(g, Coverage())
        cov.present += 1
        if g in matched:
            cov.tracked += 1
            if cov.in_gap:
                cov.fragments += 1
                cov.in_gap = False
            cov.ever_tracked = True
        elif cov.ever_tracked:
            cov.in_gap = True

    tp = len(pairs)
    fm = FrameMatch(frame=frame, pairs=tuple(detailed), fp=len(pred) - tp, fn=len(gt) - tp,
                    ids_events=ids)
    acc.tallies.append(FrameTally(
        frame=frame, gt=len(gt), tp=tp, fp=fm.fp, fn=fm.fn, ids=ids,
        overlap_sum=math.fsum(d[2] for d in detailed),
        distance_sum=math.fsum(d[3] for d in detailed),
    ))
    return fm


def classify_coverage(gt_lifetime: int, tracked: int) -> str:
    if gt_lifetime <= 0:
        raise ValueError("ground-truth lifetime must be positive")
    if not 0 <= tracked <= gt_lifetime:
        raise ValueError(f"tracked frames {tracked} outside [0, {gt_lifetime}]")
    ratio = tracked / gt_lifetime
    if ratio < ML_THRESHOLD:
        return "ML"
    if ratio > MT_THRESHOLD:
        return "MT"
    return "PT"


def _ratio(num, den) -> Optional[float]:
    return num / den if den else None


def summarize(acc: MetricsAccumulator, motp_mode: str = "overlap") -> MetricsReport:
    if motp_mode not in ("overlap", "distance"):
        raise ValueError(f"unknown MOTP mode {motp_mode!r}")
    if not acc.tallies:
        raise ValueError("no frames accumulated")
    t = acc.totals()
    gt, tp, fp, fn, ids = t["gt"], t["tp"], t["fp"], t["fn"], t["ids"]

    mota = motal = None
    if gt:
        mota = 1.0 - (fn + fp + ids) / gt
        log_ids = math.fsum(math.log10(x.ids + 1) for x in acc.tallies)
        motal = 1.0 - (fn + fp + log_ids) / gt

    motp = None
    if tp:
        if motp_mode == "overlap":
            motp = 100.0 * math.fsum(x.overlap_sum for x in acc.tallies) / tp
        else:
            motp = math.fsum(x.distance_sum for x in acc.tallies) / tp

    classes = [classify_coverage(c.present, c.tracked) for c in acc.coverage.values() if c.present]
    n_traj = len(classes)
    mt = pt = ml = None
    if n_traj:
        mt = 100.0 * classes.count("MT") / n_traj
        pt = 100.0 * classes.count("PT") / n_traj
        ml = 100.0 * classes.count("ML") / n_traj

    idf1 = idp = idr = None
    if acc.id_counts is not None:
        idf1, idp, idr = _id_ratios(acc.id_counts)

    return MetricsReport(
        MOTA=mota, MOTAL=motal, MOTP=motp,
        FAR=fp / acc.n_frames,
        Rcll=_ratio(tp, tp + fn), Prcn=_ratio(tp, tp + fp),
        IDF1=idf1, IDP=idp, IDR=idr,
        IDS=ids, FM=sum(c.fragments for c in acc.coverage.values()), FP=fp, FN=fn,
        MT=mt, PT=pt, ML=ml,
    )


def merge(a: MetricsAccumulator, b: MetricsAccumulator) -> MetricsAccumulator:
    """Combine accumulators of disjoint sequences (the "total" row of a table)."""
    coverage = {}
    for tag, src in ((0, a), (1, b)):
        for key, cov in src.coverage.items():
            coverage[(tag, key)] = dataclasses.replace(cov)
    counts = [c for c in (a.id_counts, b.id_counts) if c is not None]
    ids = None
    if counts:
        ids = IdCounts(sum(c.idtp for c in counts), sum(c.idfp for c in counts),
                       sum(c.idfn for c in counts))
    return MetricsAccumulator(
        name="total", ids_mode=a.ids_mode,
        tallies=list(a.tallies) + list(b.tallies),
        coverage=coverage, id_counts=ids,
    )


# -- identity metrics ------------------------------------------------------

def _id_ratios(c: IdCounts):
    idp = _ratio(c.idtp, c.idtp + c.idfp)
    idr = _ratio(c.idtp, c.idtp + c.idfn)
    idf1 = _ratio(2 * c.idtp, 2 * c.idtp + c.idfp + c.idfn)
    return idf1, idp, idr


def _shared_matches(gt_trajs: Trajectories, pred_trajs: Trajectories,
                    criterion: MatchCriterion) -> Dict[Tuple[ObjectId, ObjectId], int]:
    """Number of frames on which each (gt, pred) trajectory pair satisfies the criterion."""
    gt_f, pred_f = _frames_of(gt_trajs), _frames_of(pred_trajs)
    shared: Dict[Tuple[ObjectId, ObjectId], int] = {}
    for f in sorted(set(gt_f) & set(pred_f)):
        gids, pids = list(gt_f[f]), list(pred_f[f])
        ok = np.isfinite(criterion.cost_matrix([gt_f[f][g] for g in gids],
                                               [pred_f[f][p] for p in pids]))
        for r, c in zip(*np.nonzero(ok)):
            key = (gids[r], pids[c])
            shared[key] = shared.get(key, 0) + 1
    return shared


def id_counts(gt_trajs: Trajectories, pred_trajs: Trajectories,
              criterion: MatchCriterion = MatchCriterion()) -> IdCounts:
    """
    Global min-cost trajectory matching for IDTP/IDFP/IDFN.

    Every gt trajectory is paired with at most one predicted trajectory; the
    matching minimizes IDFP + IDFN summed over the sequence. Pairs that never
    satisfy the criterion can be left unmatched at no loss, so the problem
    splits into connected components of the "ever matched" graph; each
    component is solved with dummy rows/columns standing for "unmatched".
    """
    gt_len = {g: len(b) for g, b in gt_trajs.items()}
    pred_len = {p: len(b) for p, b in pred_trajs.items()}
    shared = _shared_matches(gt_trajs, pred_trajs, criterion)

    adj: Dict[Tuple[str, ObjectId], List[Tuple[str, ObjectId]]] = {}
    for g, p in shared:
        adj.setdefault(("g", g), []).append(("p", p))
        adj.setdefault(("p", p), []).append(("g", g))

    idtp = 0
    seen = set()
    for start in sorted(adj):
        if start in seen:
            continue
        comp, stack = [], [start]
        seen.add(start)
        while stack:
            node = stack.pop()
            comp.append(node)
            for nb in adj[node]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        gs = sorted(i for k, i in comp if k == "g")
        ps = sorted(i for k, i in comp if k == "p")
        idtp += _solve_id_component(gs, ps, gt_len, pred_len, shared)

    total_gt = sum(gt_len.values())
    total_pred = sum(pred_len.values())
    return IdCounts(idtp=idtp, idfp=total_pred - idtp, idfn=total_gt - idtp)


def _solve_id_component(gs, ps, gt_len, pred_len, shared) -> int:
    ng, np_ = len(gs), len(ps)
    n = ng + np_
    cost = np.full((n, n), INFEASIBLE)
    for i, g in enumerate(gs):
        for j, p in enumerate(ps):
            m = shared.get((g, p), 0)
            cost[i, j] = (gt_len[g] - m) + (pred_len[p] - m)
        cost[i, np_ + i] = gt_len[g]          # gt left unmatched: all its frames are IDFN
    for j, p in enumerate(ps):
        cost[ng + j, j] = pred_len[p]         # pred left unmatched: all its frames are IDFP
    cost[ng:, np_:] = 0.0                     # dummy-to-dummy
    idtp = 0
    for r, c in solve_assignment(cost).pairs:
        if r < ng and c < np_:
            idtp += shared.get((gs[r], ps[c]), 0)
    return idtp


def id_metrics(gt_trajs: Trajectories, pred_trajs: Trajectories,
               criterion: MatchCriterion = MatchCriterion()):
    """Return ``(IDF1, IDP, IDR)``; entries are None where undefined."""
    return _id_ratios(id_counts(gt_trajs, pred_trajs, criterion))


# -- whole-sequence evaluation ----------------------------------------------

def _frames_of(trajs: Trajectories) -> Dict[int, Dict[ObjectId, BoundingBox]]:
    out: Dict[int, Dict[ObjectId, BoundingBox]] = {}
    for oid, boxes in trajs.items():
        for f, box in boxes.items():
            out.setdefault(f, {})[oid] = box
    return out


def evaluate_sequence(gt_trajs: Trajectories, pred_trajs: Trajectories,
                      criterion: MatchCriterion = MatchCriterion(), name: str = "seq",
                      ids_mode: str = "last_known",
                      n_frames: Optional[int] = None) -> MetricsAccumulator:
    """Accumulate every frame in ``[0, n_frames)`` and attach identity counts.

    ``n_frames`` defaults to one past the last frame present in either input.
    """
    gt_f, pred_f = _frames_of(gt_trajs), _frames_of(pred_trajs)
    if n_frames is None:
        n_frames = max(list(gt_f) + list(pred_f), default=-1) + 1
    acc = MetricsAccumulator(name=name, ids_mode=ids_mode)
    for f in range(n_frames):
        match_frame(acc, f, gt_f.get(f, {}), pred_f.get(f, {}), criterion)
    acc.id_counts = id_counts(gt_trajs, pred_trajs, criterion)
    return acc
