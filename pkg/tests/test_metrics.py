import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from aerialtrack.core import BoundingBox
from aerialtrack.metrics import (FrameTally, MatchCriterion, MetricsAccumulator, classify_coverage,
                                 evaluate_sequence, id_counts, id_metrics, match_frame, merge,
                                 summarize)
from micro_scenarios import box_at, split_track, three_frame_tallies


def test_identical_sets_are_all_true_positives():
    gt = {1: box_at(1), 2: box_at(2)}
    acc = MetricsAccumulator()
    m = match_frame(acc, 0, gt, dict(gt))
    assert (len(m.pairs), m.fp, m.fn, m.ids_events) == (2, 0, 0, 0)


def test_switch_between_overlapping_predictions_counts_once():
    acc = MetricsAccumulator()
    match_frame(acc, 0, {1: box_at(1)}, {7: box_at(1)})
    m = match_frame(acc, 1, {1: box_at(1)}, {9: box_at(1)})
    assert m.ids_events == 1
    assert match_frame(acc, 2, {1: box_at(1)}, {9: box_at(1)}).ids_events == 0


def test_two_pixel_shift_of_small_box_is_a_miss():
    g, p = BoundingBox(0, 0, 4, 4), BoundingBox(2, 0, 6, 4)
    # overlap 8, union 24
    assert MatchCriterion().cost(g, p) == math.inf
    m = match_frame(MetricsAccumulator(), 0, {1: g}, {1: p})
    assert (m.fp, m.fn) == (1, 1)


def test_three_frame_fixture_equations():
    gt, pred = three_frame_tallies()
    acc = evaluate_sequence(gt, pred)
    t = acc.totals()
    assert (t["gt"], t["fn"], t["fp"], t["ids"]) == (20, 2, 1, 1)
    r = summarize(acc)
    assert r.MOTA == pytest.approx(0.8, abs=1e-12)
    assert r.MOTAL == pytest.approx(1 - (2 + 1 + math.log10(2)) / 20, abs=1e-12)
    assert r.FAR == pytest.approx(1 / 3, abs=1e-12)
    assert r.Rcll == pytest.approx(18 / 20, abs=1e-12)
    assert r.Prcn == pytest.approx(18 / 19, abs=1e-12)
    assert r.FM == 1
    assert r.MOTP == pytest.approx(100.0)


def _acc_from_tallies(rows):
    acc = MetricsAccumulator()
    for f, (gt, fp, fn, ids) in enumerate(rows):
        acc.tallies.append(FrameTally(f, gt, gt - fn, fp, fn, ids, float(gt - fn), 0.0))
    return acc


def test_motal_damps_identity_switches():
    acc = _acc_from_tallies([(10, 1, 1, 9), (10, 0, 1, 0)])
    r = summarize(acc)
    assert r.MOTAL == pytest.approx(1 - (2 + 1 + 1) / 20, abs=1e-12)
    assert r.MOTA == pytest.approx(1 - 12 / 20, abs=1e-12)


def test_false_alarm_rate():
    acc = _acc_from_tallies([(1, 1 if f < 5 else 0, 0, 0) for f in range(10)])
    assert summarize(acc).FAR == 0.5


@pytest.mark.parametrize("tracked,label", [(9, "MT"), (1, "ML"), (8, "PT"), (2, "PT"), (5, "PT"),
                                           (10, "MT"), (0, "ML")])
def test_coverage_classes(tracked, label):
    assert classify_coverage(10, tracked) == label


def test_coverage_rejects_bad_input():
    with pytest.raises(ValueError):
        classify_coverage(0, 0)
    with pytest.raises(ValueError):
        classify_coverage(5, 6)


def test_fragmentation_counts_interior_gaps_only():
    gt = {1: {f: box_at(1) for f in range(8)}}
    # tracked 0-1, lost 2, tracked 3, lost 4-5, tracked 6, lost 7 (trailing loss is no fragment)
    pred = {5: {f: box_at(1) for f in (0, 1, 3, 6)}}
    r = summarize(evaluate_sequence(gt, pred))
    assert r.FM == 2
    pred = {5: {f: box_at(1) for f in (2, 3, 4)}}  # late start is no fragment either
    assert summarize(evaluate_sequence(gt, pred)).FM == 0


def test_ids_mode_last_known_versus_previous_frame():
    gt = {1: {f: box_at(1) for f in range(3)}}
    pred = {7: {0: box_at(1)}, 9: {2: box_at(1)}}
    assert summarize(evaluate_sequence(gt, pred)).IDS == 1
    assert summarize(evaluate_sequence(gt, pred, ids_mode="previous_frame")).IDS == 0
    with pytest.raises(ValueError):
        MetricsAccumulator(ids_mode="sometimes")


def test_valid_correspondence_persists_over_a_better_candidate():
    acc = MetricsAccumulator()
    match_frame(acc, 0, {1: box_at(1)}, {7: box_at(1)})
    # pred 7 drifts but still overlaps enough; pred 9 sits exactly on the object
    m = match_frame(acc, 1, {1: box_at(1)}, {7: box_at(1, dx=0.5), 9: box_at(1)})
    assert [(g, p) for g, p, _, _ in m.pairs] == [(1, 7)]
    assert m.ids_events == 0 and m.fp == 1


def test_frames_must_increase():
    acc = MetricsAccumulator()
    match_frame(acc, 3, {}, {})
    with pytest.raises(ValueError):
        match_frame(acc, 3, {}, {})


def test_motp_modes_and_distance_criterion():
    gt = {1: {0: BoundingBox(0, 0, 10, 10)}}
    pred = {1: {0: BoundingBox(1, 0, 11, 10)}}
    acc = evaluate_sequence(gt, pred)
    assert summarize(acc).MOTP == pytest.approx(100 * 90 / 110)
    assert summarize(acc, "distance").MOTP == pytest.approx(1.0)
    with pytest.raises(ValueError):
        summarize(acc, "median")
    crit = MatchCriterion("distance", 1.0)
    assert summarize(evaluate_sequence(gt, pred, crit)).FN == 0
    assert summarize(evaluate_sequence(gt, pred, MatchCriterion("distance", 0.9))).FN == 1


def test_undefined_values_are_none():
    acc = evaluate_sequence({}, {}, n_frames=2)
    r = summarize(acc)
    assert r.MOTA is None and r.MOTP is None and r.Rcll is None and r.MT is None
    assert r.FAR == 0.0
    with pytest.raises(ValueError):
        summarize(MetricsAccumulator())


def test_identity_metric_examples():
    gt, _ = split_track()
    assert id_metrics(gt, gt) == (1.0, 1.0, 1.0)
    assert id_metrics(*split_track()) == (0.5, 0.5, 0.5)
    idf1, idp, idr = id_metrics(gt, {})
    assert idf1 == 0 and idr == 0 and idp is None


def brute_force_idtp(gt, pred, crit):
    """Try every partial one-to-one pairing of trajectories and keep the best IDTP."""
    gs, ps = sorted(gt), sorted(pred)

    def shared(g, p):
        return sum(1 for f, b in gt[g].items() if f in pred[p] and crit.accepts(b, pred[p][f]))

    best = 0
    for k in range(min(len(gs), len(ps)) + 1):
        for g_sub in itertools.combinations(gs, k):
            for p_perm in itertools.permutations(ps, k):
                best = max(best, sum(shared(g, p) for g, p in zip(g_sub, p_perm)))
    return best


@st.composite
def small_track_sets(draw):
    """Few trajectories living on 3 lanes so pairs overlap often."""
    def trajs(n):
        out = {}
        for i in range(n):
            lane = draw(st.integers(0, 2))
            frames = draw(st.sets(st.integers(0, 5), min_size=1, max_size=6))
            out[i + 1] = {f: box_at(lane, dx=draw(st.sampled_from([0.0, 0.5, 3.0]))) for f in frames}
        return out
    return trajs(draw(st.integers(0, 4))), trajs(draw(st.integers(0, 4)))


@settings(max_examples=150, deadline=None)
@given(small_track_sets())
def test_id_matching_is_optimal_against_enumeration(sets):
    gt, pred = sets
    crit = MatchCriterion()
    c = id_counts(gt, pred, crit)
    assert c.idtp == brute_force_idtp(gt, pred, crit)
    assert c.idfn == sum(map(len, gt.values())) - c.idtp
    assert c.idfp == sum(map(len, pred.values())) - c.idtp


@settings(max_examples=100, deadline=None)
@given(small_track_sets())
def test_idf1_is_harmonic_mean(sets):
    idf1, idp, idr = id_metrics(*sets)
    if idp and idr:
        assert idf1 == pytest.approx(2 * idp * idr / (idp + idr), abs=1e-12)


def test_merge_identity_commutativity_and_joint_equivalence():
    gt_a, pred_a = three_frame_tallies()
    gt_b, pred_b = split_track()
    a, b = evaluate_sequence(gt_a, pred_a), evaluate_sequence(gt_b, pred_b)
    empty = MetricsAccumulator()
    assert summarize(merge(a, empty)) == summarize(a)
    assert summarize(merge(a, b)) == summarize(merge(b, a))

    # the same two sequences laid end to end with disjoint ids
    shift = 3
    joint_gt = dict(gt_a)
    joint_pred = dict(pred_a)
    for g, boxes in gt_b.items():
        joint_gt[1000 + g] = {f + shift: bx for f, bx in boxes.items()}
    for p, boxes in pred_b.items():
        joint_pred[1000 + p] = {f + shift: bx for f, bx in boxes.items()}
    joint = evaluate_sequence(joint_gt, joint_pred)
    assert summarize(merge(a, b)) == summarize(joint)
