"""Simulate, detect, track and evaluate in one call; parameter sweeps over seeds."""

from __future__ import annotations

import dataclasses
from typing import Dict, List, Sequence, Tuple

from .metrics import MatchCriterion, MetricsAccumulator, MetricsReport, evaluate_sequence, merge, summarize
from .simulator import NoiseConfig, Scenario, corrupt, preset, simulate
from .trackers import TrackerConfig, track_sequence

# sweepable parameter name -> TrackerConfig field
SWEEP_PARAMS = {"gate": "gate_threshold", "enlarge": "box_enlarge_factor", "max_age": "max_age"}


def evaluate_tracker(scn: Scenario, detections: Dict, cfg: TrackerConfig,
                     criterion: MatchCriterion = MatchCriterion()) -> MetricsAccumulator:
    n = scn.config.frames
    result = track_sequence(cfg, scn.meta, detections, n)
    return evaluate_sequence(scn.ground_truth, result.trajectories, criterion,
                             name=scn.meta.name, n_frames=n)


def merge_all(accs: Sequence[MetricsAccumulator]) -> MetricsAccumulator:
    if not accs:
        raise ValueError("nothing to merge")
    total = accs[0]
    for a in accs[1:]:
        total = merge(total, a)
    return total


def with_param(cfg: TrackerConfig, param: str, value) -> TrackerConfig:
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}; choose from {sorted(SWEEP_PARAMS)}")
    if param == "max_age":
        if float(value) != int(value):
            raise ValueError(f"max_age must be an integer, got {value}")
        value = int(value)
    return dataclasses.replace(cfg, **{SWEEP_PARAMS[param]: value})


def sweep(preset_name: str, seeds: Sequence[int], param: str, values: Sequence[float],
          base: TrackerConfig, noise: NoiseConfig = NoiseConfig(),
          criterion: MatchCriterion = MatchCriterion()) -> List[Tuple[float, MetricsReport]]:
    """Metrics pooled over ``seeds`` for every parameter value.

    Each seed's detections use ``noise`` with its seed replaced by the scenario
    seed, so every parameter value sees the same inputs.
    """
    cfgs = [with_param(base, param, v) for v in values]
    per_value: List[List[MetricsAccumulator]] = [[] for _ in values]
    for seed in seeds:
        scn = simulate(preset(preset_name, seed=seed))
        dets = corrupt(scn, dataclasses.replace(noise, seed=seed))
        for i, cfg in enumerate(cfgs):
            per_value[i].append(evaluate_tracker(scn, dets, cfg, criterion))
    return [(v, summarize(merge_all(accs))) for v, accs in zip(values, per_value)]
