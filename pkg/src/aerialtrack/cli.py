"""Command-line interface: simulate, track, evaluate, sweep and report."""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from . import annotations as ann
from .metrics import MatchCriterion, evaluate_sequence, summarize
from .motion import MotionNoiseConfig
from .pipeline import SWEEP_PARAMS, merge_all, sweep
from .report import (document_rows, dump_json, metrics_document, render_markdown, render_table,
                     sweep_csv, sweep_svg)
from .simulator import PRESETS, NoiseConfig, ScenarioConfig, corrupt, preset, simulate
from .trackers import TrackerConfig, track_sequence

PROG = "aerialtrack"


class CliError(Exception):
    pass


def _warn(msg: str) -> None:
    print(f"{PROG}: warning: {msg}", file=sys.stderr)


def _read(path: str) -> ann.AnnotationFile:
    af = ann.read_annotations(path)
    for w in af.warnings:
        _warn(f"{path}: {w}")
    return af


def _noise_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--jitter", type=float, default=0.0, help="detection jitter sigma in px")
    p.add_argument("--p-miss", type=float, default=0.0, help="per-object miss probability")
    p.add_argument("--clutter", type=float, default=0.0, help="mean false positives per frame")


def _tracker_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("euclidean", "iou"), default="euclidean")
    p.add_argument("--max-age", type=int, default=3, help="frames a track may coast")
    p.add_argument("--enlarge", type=float, default=1.0, help="box enlargement factor (iou mode)")
    p.add_argument("--allow-reacquire", action="store_true",
                   help="let coasting tracks compete for detections (euclidean mode)")
    d = MotionNoiseConfig()
    p.add_argument("--process-pos-var", type=float, default=d.process_pos_var, help="px^2")
    p.add_argument("--process-vel-var", type=float, default=d.process_vel_var, help="px^2")
    p.add_argument("--measurement-var", type=float, default=d.measurement_var, help="px^2")


def _criterion_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--criterion", choices=("iou", "distance"), default="iou")
    p.add_argument("--threshold", type=float, default=None,
                   help="IoU must exceed this (default 0.5), or center distance in px "
                        "must not exceed it (default 17)")


def _criterion(args) -> MatchCriterion:
    thr = args.threshold
    if thr is None:
        thr = 0.5 if args.criterion == "iou" else 17.0
    return MatchCriterion(kind=args.criterion, threshold=thr)


def _tracker_config(args, gate: Optional[float]) -> TrackerConfig:
    return TrackerConfig(mode=args.mode, gate_threshold=gate, max_age=args.max_age,
                         box_enlarge_factor=args.enlarge,
                         require_prev_match=not args.allow_reacquire,
                         noise=MotionNoiseConfig(args.process_pos_var, args.process_vel_var,
                                                 args.measurement_var))


# -- subcommands ------------------------------------------------------------

def cmd_simulate(args) -> None:
    if (args.config is None) == (args.preset is None):
        raise CliError("give exactly one of a config file or --preset")
    if args.config is not None:
        with open(args.config, encoding="utf-8") as f:
            raw = json.load(f)
        if not isinstance(raw, dict):
            raise CliError(f"{args.config}: expected a JSON object")
        cfg = ScenarioConfig.from_dict(raw)
        if args.seed is not None:
            cfg = ScenarioConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
    else:
        cfg = preset(args.preset, seed=0 if args.seed is None else args.seed)
    scn = simulate(cfg)
    noise = NoiseConfig(jitter_sigma=args.jitter, p_miss=args.p_miss, clutter_rate=args.clutter,
                        seed=cfg.seed if args.noise_seed is None else args.noise_seed)
    outputs = [(args.out, ann.from_trajectories(scn.meta, scn.ground_truth))]
    if args.det is not None:
        outputs.append((args.det, ann.from_detections(scn.meta, corrupt(scn, noise))))
    for path, af in outputs:
        ann.save_annotations(path, af)


def cmd_track(args) -> None:
    af = _read(args.detections)
    cfg = _tracker_config(args, args.gate).resolved(af.meta)
    n = af.n_frames if args.frames is None else args.frames
    result = track_sequence(cfg, af.meta, ann.to_detections(af), n)
    ann.save_annotations(args.out, ann.from_trajectories(af.meta, result.trajectories))
    print(f"{len(result.trajectories)} tracks over {n} frames "
          f"(mode {cfg.mode}, gate {cfg.gate_threshold:g})")


def cmd_evaluate(args) -> None:
    files = args.files
    if len(files) % 2:
        raise CliError("expected GT/RESULT file pairs")
    crit = _criterion(args)
    accs, reports = [], []
    for gt_path, res_path in zip(files[::2], files[1::2]):
        gt, res = _read(gt_path), _read(res_path)
        n = max(gt.n_frames, res.n_frames)
        acc = evaluate_sequence(ann.to_trajectories(gt), ann.to_trajectories(res), crit,
                                name=gt.meta.name, ids_mode=args.ids_mode, n_frames=n)
        accs.append(acc)
        reports.append((gt.meta.name, summarize(acc, args.motp_mode)))
    total = summarize(merge_all(accs), args.motp_mode)
    settings = {"criterion": crit.kind, "threshold": crit.threshold,
                "motp_mode": args.motp_mode, "ids_mode": args.ids_mode}
    doc = metrics_document(reports, total, settings)
    if args.json is not None:
        ann.write_text_atomic(args.json, dump_json(doc))
    sys.stdout.write(render_table(document_rows(doc)))


def cmd_sweep(args) -> None:
    if args.param == "gate" and args.mode == "euclidean":
        _warn("euclidean gate values are in meters")
    base = _tracker_config(args, None)
    noise = NoiseConfig(jitter_sigma=args.jitter, p_miss=args.p_miss, clutter_rate=args.clutter)
    results = sweep(args.preset, args.seeds, args.param, args.values, base, noise)
    text = sweep_csv(args.param, results)
    outputs = [(args.out, text)]
    if args.svg is not None:
        pts = []
        for v, rep in results:
            y = getattr(rep, args.metric)
            if y is not None:
                pts.append((v, float(y)))
        outputs.append((args.svg, sweep_svg(args.param, args.metric, pts)))
    for path, body in outputs:
        ann.write_text_atomic(path, body)
    sys.stdout.write(text)


def cmd_report(args) -> None:
    with open(args.metrics, encoding="utf-8") as f:
        doc = json.load(f)
    md = render_markdown(document_rows(doc), title=args.title)
    if args.out is not None:
        ann.write_text_atomic(args.out, md)
    else:
        sys.stdout.write(md)


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate ground truth (and detections)")
    p.add_argument("config", nargs="?", help="scenario config JSON")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="ground-truth CSV")
    p.add_argument("--det", help="also write detections to this CSV")
    p.add_argument("--noise-seed", type=int, default=None, help="defaults to the scenario seed")
    _noise_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("track", help="run a tracker over a detection CSV")
    p.add_argument("detections")
    p.add_argument("--gate", type=float, default=None,
                   help="meters (euclidean, default 17*gsd) or max 1-IoU cost (iou, default 0.5)")
    p.add_argument("--frames", type=int, default=None, help="sequence length (default: last frame)")
    p.add_argument("--out", required=True)
    _tracker_args(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("evaluate", help="score result CSVs against ground truth")
    p.add_argument("files", nargs="+", metavar="GT RESULT")
    _criterion_args(p)
    p.add_argument("--motp-mode", choices=("overlap", "distance"), default="overlap")
    p.add_argument("--ids-mode", choices=("last_known", "previous_frame"), default="last_known")
    p.add_argument("--json", help="write metrics JSON here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="metrics versus one tracker parameter")
    p.add_argument("--preset", choices=PRESETS, default="dense")
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--param", choices=sorted(SWEEP_PARAMS), default="gate")
    p.add_argument("--values", type=float, nargs="+", required=True)
    p.add_argument("--out", required=True, help="sweep CSV")
    p.add_argument("--svg", help="also write an SVG line plot")
    p.add_argument("--metric", default="IDS", choices=("IDS", "FP", "FN", "FM", "MOTA", "IDF1", "MOTP"),
                   help="metric plotted in the SVG")
    _tracker_args(p)
    _noise_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="render metrics JSON as markdown")
    p.add_argument("metrics")
    p.add_argument("--title", default=None)
    p.add_argument("--out", default=None, help="markdown file (default: stdout)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse already printed usage and the message
        return int(e.code or 0)
    try:
        args.func(args)
    except (CliError, OSError, ValueError) as e:
        print(f"{PROG}: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
