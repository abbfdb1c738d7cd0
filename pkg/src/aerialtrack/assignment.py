"""
Gated rectangular linear assignment.

Cost matrices are float ndarrays of shape (rows, cols). Infeasible cells hold
INFEASIBLE (positive infinity); it never enters a cost sum. The solver first
maximizes the number of feasible matches and then minimizes their total cost.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .core import BoundingBox, Point, iou_matrix

INFEASIBLE = math.inf

BRUTEFORCE_MAX_DIM = 8


@dataclass(frozen=True)
class Assignment:
    pairs: Tuple[Tuple[int, int], ...]
    unmatched_rows: Tuple[int, ...]
    unmatched_cols: Tuple[int, ...]
    total_cost: float = 0.0

    @property
    def row_to_col(self) -> dict:
        return dict(self.pairs)


def as_cost_matrix(cells) -> np.ndarray:
    """Coerce nested lists into a validated (rows, cols) cost matrix."""
    m = np.asarray(cells, dtype=float)
    if m.ndim == 1 and m.size == 0:
        return m.reshape(0, 0)
    if m.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got shape {m.shape}")
    if np.isnan(m).any():
        raise ValueError("cost matrix contains NaN")
    if (m < 0).any():
        raise ValueError("cost matrix cells must be non-negative")
    return m


def euclidean_cost_matrix(predictions: Sequence[Point], detections: Sequence[Point],
                          gsd: float) -> np.ndarray:
    """Pairwise center distances in meters: ``gsd * ||p_i - d_j||``."""
    if not gsd > 0:
        raise ValueError(f"gsd must be positive, got {gsd}")
    p = np.asarray(predictions, dtype=float).reshape(-1, 2)
    d = np.asarray(detections, dtype=float).reshape(-1, 2)
    diff = p[:, None, :] - d[None, :, :]
    return gsd * np.hypot(diff[..., 0], diff[..., 1])


def iou_cost_matrix(track_boxes: Sequence[BoundingBox],
                    det_boxes: Sequence[BoundingBox]) -> np.ndarray:
    return 1.0 - iou_matrix(track_boxes, det_boxes)


def gate(m, threshold: float) -> np.ndarray:
    """Mark every cell strictly above ``threshold`` infeasible."""
    if threshold < 0:
        raise ValueError(f"gate threshold must be non-negative, got {threshold}")
    out = np.array(m, dtype=float, copy=True)
    out[out > threshold] = INFEASIBLE
    return out


def _finish(m: np.ndarray, pairs: List[Tuple[int, int]]) -> Assignment:
    pairs = sorted(pairs)
    rows = {r for r, _ in pairs}
    cols = {c for _, c in pairs}
    total = math.fsum(float(m[r, c]) for r, c in pairs)
    return Assignment(
        pairs=tuple(pairs),
        unmatched_rows=tuple(r for r in range(m.shape[0]) if r not in rows),
        unmatched_cols=tuple(c for c in range(m.shape[1]) if c not in cols),
        total_cost=total,
    )


def _lex_less(a_hi, a_lo, b_hi, b_lo):
    return (a_hi < b_hi) | ((a_hi == b_hi) & (a_lo < b_lo))


def _hungarian_dense(cost: np.ndarray) -> List[Tuple[int, int]]:
    """
    Shortest-augmenting-path Hungarian method on an n x m block with n <= m.

    Each cell cost is the pair (infeasible?, value) compared lexicographically,
    so the optimum uses as few infeasible cells as possible and, among those
    assignments, has minimum feasible cost. Pairs landing on infeasible cells
    are dropped by the caller.
    """
    n, m = cost.shape
    feasible = np.isfinite(cost)
    c_hi = np.zeros((n + 1, m + 1))
    c_lo = np.zeros((n + 1, m + 1))
    c_hi[1:, 1:] = np.where(feasible, 0.0, 1.0)
    c_lo[1:, 1:] = np.where(feasible, cost, 0.0)

    u_hi = np.zeros(n + 1)
    u_lo = np.zeros(n + 1)
    v_hi = np.zeros(m + 1)
    v_lo = np.zeros(m + 1)
    match = np.zeros(m + 1, dtype=int)  # match[j] = row (1-based) on column j
    way = np.zeros(m + 1, dtype=int)

    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        min_hi = np.full(m + 1, np.inf)
        min_lo = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match[j0]
            free = ~used
            free[0] = False
            cur_hi = c_hi[i0] - u_hi[i0] - v_hi
            cur_lo = c_lo[i0] - u_lo[i0] - v_lo
            better = free & _lex_less(cur_hi, cur_lo, min_hi, min_lo)
            min_hi = np.where(better, cur_hi, min_hi)
            min_lo = np.where(better, cur_lo, min_lo)
            way[better] = j0

            cand = np.flatnonzero(free)
            best_hi = min_hi[cand].min()
            tied = cand[min_hi[cand] == best_hi]
            j1 = int(tied[np.argmin(min_lo[tied])])  # argmin keeps the lowest column on ties
            d_hi, d_lo = min_hi[j1], min_lo[j1]

            rows_used = match[used]
            u_hi[rows_used] += d_hi
            u_lo[rows_used] += d_lo
            v_hi[used] -= d_hi
            v_lo[used] -= d_lo
            min_hi[free] -= d_hi
            min_lo[free] -= d_lo
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1

    pairs = []
    for j in range(1, m + 1):
        if match[j]:
            r, c = match[j] - 1, j - 1
            if feasible[r, c]:
                pairs.append((r, c))
    return pairs


def solve_assignment(m) -> Assignment:
    """
    Maximum-cardinality, then minimum-cost, one-to-one matching over feasible cells.

    The feasible cells are split into connected components of the bipartite
    row/column graph and each component is solved independently; gated
    tracking matrices are mostly infeasible, so components stay small.
    Rows are processed in increasing order and pivots prefer the lowest
    column index, which makes the result deterministic.
    """
    m = as_cost_matrix(m)
    n_rows, n_cols = m.shape
    feasible = np.isfinite(m)
    if not feasible.any():
        return _finish(m, [])

    r_idx, c_idx = np.nonzero(feasible)
    graph = csr_matrix((np.ones(len(r_idx)), (r_idx, c_idx + n_rows)),
                       shape=(n_rows + n_cols, n_rows + n_cols))
    _, labels = connected_components(graph, directed=False)

    n_labels = int(labels.max()) + 1
    row_labels, col_labels = labels[:n_rows], labels[n_rows:]
    row_count = np.bincount(row_labels, minlength=n_labels)
    col_count = np.bincount(col_labels, minlength=n_labels)
    has_edge = np.zeros(n_labels, dtype=bool)
    has_edge[row_labels[r_idx]] = True

    # 1 x 1 components are the common case and need no solving
    single = has_edge & (row_count == 1) & (col_count == 1)
    row_single = single[row_labels]
    col_of_label = np.full(n_labels, -1)
    col_of_label[col_labels[single[col_labels]]] = np.flatnonzero(single[col_labels])
    pairs = [(int(r), int(col_of_label[row_labels[r]])) for r in np.flatnonzero(row_single)]

    multi = np.flatnonzero(has_edge & ~single)
    if len(multi) == 0:
        return _finish(m, pairs)
    row_order = np.argsort(row_labels, kind="stable")
    col_order = np.argsort(col_labels, kind="stable")
    row_start = np.concatenate(([0], np.cumsum(row_count)))
    col_start = np.concatenate(([0], np.cumsum(col_count)))
    for lab in multi:
        rows = row_order[row_start[lab]:row_start[lab + 1]]
        cols = col_order[col_start[lab]:col_start[lab + 1]]
        block = m[np.ix_(rows, cols)]
        if len(rows) == 1:
            local = [(0, int(np.argmin(block[0])))]
        elif len(cols) == 1:
            local = [(int(np.argmin(block[:, 0])), 0)]
        elif len(rows) <= len(cols):
            local = _hungarian_dense(block)
        else:
            local = [(r, c) for c, r in _hungarian_dense(block.T)]
        pairs.extend((int(rows[r]), int(cols[c])) for r, c in local)
    return _finish(m, pairs)


def solve_assignment_bruteforce(m) -> Assignment:
    """Exhaustive oracle for matrices up to 8 x 8.

    Among maximal-cardinality feasible matchings, returns the one with the
    smallest total cost, ties going to the lexicographically smallest sorted
    pair list.
    """
    m = as_cost_matrix(m)
    n_rows, n_cols = m.shape
    if max(n_rows, n_cols) > BRUTEFORCE_MAX_DIM:
        raise ValueError(f"brute force limited to {BRUTEFORCE_MAX_DIM}x{BRUTEFORCE_MAX_DIM}, "
                         f"got {n_rows}x{n_cols}")
    if n_rows == 0 or n_cols == 0:
        return _finish(m, [])

    transposed = n_rows > n_cols
    work = m.T if transposed else m
    k = work.shape[0]
    feasible = np.isfinite(work).tolist()
    cells = work.tolist()

    best_key = None
    best_pairs: List[Tuple[int, int]] = []
    seen = set()
    for perm in itertools.permutations(range(work.shape[1]), k):
        chosen = tuple((r, c) for r, c in enumerate(perm) if feasible[r][c])
        if chosen in seen:
            continue
        seen.add(chosen)
        pairs = sorted((c, r) for r, c in chosen) if transposed else list(chosen)
        key = (-len(chosen), math.fsum(cells[r][c] for r, c in chosen), pairs)
        if best_key is None or key < best_key:
            best_key, best_pairs = key, pairs
    return _finish(m, best_pairs)
