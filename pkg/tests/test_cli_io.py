import csv
import json
import re
from pathlib import Path

import pytest

from aerialtrack import annotations as ann
from aerialtrack.cli import main
from aerialtrack.core import BoundingBox, SequenceMeta
from aerialtrack.metrics import evaluate_sequence, summarize

DATA = Path(__file__).parent / "data"
HEADER = '# {"frame_rate": 2.0, "gsd": 0.12, "height": 100, "name": "t", "width": 100}\n'
COLUMNS = "frame,id,x1,y1,x2,y2\n"


@pytest.mark.parametrize("name", ["golden_gt.csv", "golden_det.csv"])
def test_round_trip_is_byte_stable(name):
    text = (DATA / name).read_text()
    assert ann.write_annotations(ann.parse_annotations(text)) == text


def test_parse_golden_contents():
    af = ann.parse_annotations((DATA / "golden_gt.csv").read_text())
    assert af.meta == SequenceMeta(gsd=0.12, frame_rate=2.0, width=300, height=200, name="golden")
    assert len(af.rows) == 8 and af.n_frames == 3 and af.warnings == []
    trajs = ann.to_trajectories(af)
    assert sorted(trajs) == [1, 2, 7, 9] and sorted(trajs[1]) == [0, 1, 2]
    dets = ann.to_detections(ann.parse_annotations((DATA / "golden_det.csv").read_text()))
    assert sorted(dets) == [0, 1, 3] and len(dets[0]) == 2
    with pytest.raises(ValueError):
        ann.to_trajectories(ann.parse_annotations((DATA / "golden_det.csv").read_text()))


def test_point_rows_become_small_boxes():
    af = ann.parse_annotations((DATA / "points.csv").read_text())
    assert af.rows[0].box == BoundingBox(8, 8, 12, 12)
    assert af.rows[1].box == BoundingBox(-1, 48, 3, 52)
    assert len(af.warnings) == 1 and af.warnings[0].startswith("line 4:")
    coarse = ann.parse_annotations(HEADER.replace("0.12", "0.15") + COLUMNS + "0,1,10,10,10,10\n")
    assert coarse.rows[0].box == BoundingBox(7.5, 7.5, 12.5, 12.5)


@pytest.mark.parametrize("text,message", [
    (HEADER + COLUMNS + "0,1,1,2,3\n", "line 3: expected 6 fields"),
    (HEADER + COLUMNS + "0,1,1,2,3,4\n0,2,1,2,x,4\n", "line 4: non-numeric x2"),
    (HEADER + COLUMNS + "1,1,1,2,3,4\n0,1,1,2,3,4\n", "line 4: frames not sorted"),
    (HEADER + COLUMNS + "0,2,1,2,3,4\n0,1,1,2,3,4\n", "line 4: rows not sorted"),
    (HEADER + COLUMNS + "0,1,1,2,3,4\n0,1,1,2,3,4\n", "line 4: rows not sorted"),
    (HEADER + COLUMNS + "0,1,3,2,1,4\n", "line 3: box corners out of order"),
    (HEADER + COLUMNS + "0,1,nan,2,3,4\n", "line 3: x1 must be finite"),
    (HEADER + COLUMNS + "0,-2,1,2,3,4\n", "line 3: id must be >= -1"),
    ('# {"gsd": 0.12, "width": 10}\n' + COLUMNS, "line 1: missing header fields"),
    ("frame,id,x1,y1,x2,y2\n", "line 1: expected a '# {...}' metadata header"),
    (HEADER + "frame,x1\n", "line 2: expected column header"),
    ("", "line 1: empty file"),
])
def test_parse_errors_name_the_line(text, message):
    with pytest.raises(ann.AnnotationError, match="^" + re.escape(message)):
        ann.parse_annotations(text)


def test_repeated_detection_rows_are_allowed():
    af = ann.parse_annotations(HEADER + COLUMNS + "0,-1,1,2,3,4\n0,-1,1,2,3,4\n")
    assert len(af.rows) == 2


def test_atomic_write_leaves_no_temp_files(tmp_path):
    p = tmp_path / "x.csv"
    ann.write_text_atomic(p, "a\n")
    ann.write_text_atomic(p, "b\n")
    assert p.read_text() == "b\n" and [f.name for f in tmp_path.iterdir()] == ["x.csv"]


# -- command line -----------------------------------------------------------

def run(*argv):
    return main([str(a) for a in argv])


def test_simulate_track_evaluate_report(tmp_path, capsys):
    gt, det, res = tmp_path / "gt.csv", tmp_path / "det.csv", tmp_path / "res.csv"
    assert run("simulate", "--preset", "sparse", "--seed", 2, "--out", gt, "--det", det,
               "--jitter", 0.5) == 0
    af = ann.read_annotations(gt)
    assert af.warnings == []
    trajs = ann.to_trajectories(af)
    assert summarize(evaluate_sequence(trajs, trajs)).MOTA == 1.0

    assert run("track", det, "--out", res) == 0
    out = capsys.readouterr().out
    assert "gate 2.04" in out  # 17 px at 0.12 m/px

    metrics = tmp_path / "m.json"
    assert run("evaluate", gt, gt, gt, res, "--json", metrics) == 0
    table = capsys.readouterr().out.splitlines()
    assert table[0].split()[:3] == ["Sequence", "IDF1", "IDP"] and table[-1].startswith("total")
    doc = json.loads(metrics.read_text())
    assert doc["sequences"][0]["metrics"]["MOTA"] == 1.0
    assert set(doc["total"]) == {"MOTA", "MOTAL", "MOTP", "FAR", "Rcll", "Prcn", "IDF1", "IDP",
                                 "IDR", "IDS", "FM", "FP", "FN", "MT", "PT", "ML"}

    md = tmp_path / "r.md"
    assert run("report", metrics, "--out", md, "--title", "Run") == 0
    lines = md.read_text().splitlines()
    assert lines[0] == "# Run" and lines[2].startswith("| Sequence | IDF1")
    assert sum(1 for ln in lines if ln.startswith("| ")) == 4


def test_explicit_nulls_in_metrics_json(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text(HEADER + COLUMNS)
    gt = tmp_path / "gt.csv"
    gt.write_text(HEADER + COLUMNS + "0,1,10,10,14,14\n")
    metrics = tmp_path / "m.json"
    assert run("evaluate", gt, empty, "--json", metrics) == 0
    raw = metrics.read_text()
    assert '"IDP": null' in raw and '"MOTP": null' in raw


def test_simulate_from_config_file_and_determinism(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_objects": 5, "frames": 6, "seed": 1,
                               "meta": {"gsd": 0.12, "width": 300, "height": 300, "name": "c"}}))
    outs = []
    for i in range(2):
        gt, det = tmp_path / f"gt{i}.csv", tmp_path / f"det{i}.csv"
        assert run("simulate", cfg, "--out", gt, "--det", det, "--jitter", 1, "--clutter", 1,
                   "--p-miss", 0.1) == 0
        outs.append((gt.read_bytes(), det.read_bytes()))
    assert outs[0] == outs[1]
    assert ann.read_annotations(tmp_path / "gt0.csv").meta.name == "c"


def test_track_gate_default_and_override(tmp_path, capsys):
    det = tmp_path / "det.csv"
    det.write_text((DATA / "golden_det.csv").read_text())
    res = tmp_path / "res.csv"
    assert run("track", det, "--out", res) == 0
    assert "gate 2.55" in capsys.readouterr().out  # 17 px at 0.15 m/px
    assert run("track", det, "--mode", "iou", "--gate", 0.99, "--enlarge", 2, "--out", res) == 0
    assert "gate 0.99" in capsys.readouterr().out
    assert run("track", det, "--measurement-var", -1, "--out", res) == 1
    assert run("track", det, "--measurement-var", 0, "--process-pos-var", 0, "--out", res) == 0
    rows = ann.read_annotations(res).rows
    assert rows and all(r.id >= 1 for r in rows)


def test_sweep_writes_csv_and_svg(tmp_path):
    out, svg = tmp_path / "s.csv", tmp_path / "s.svg"
    assert run("sweep", "--preset", "dense", "--seeds", 0, "--mode", "iou", "--param", "gate",
               "--values", 0.5, 0.7, 0.9, 0.99, "--jitter", 1.5, "--out", out, "--svg", svg) == 0
    rows = list(csv.DictReader(out.open()))
    ids = [int(r["IDS"]) for r in rows]
    assert [float(r["gate"]) for r in rows] == [0.5, 0.7, 0.9, 0.99]
    assert all(a >= b for a, b in zip(ids, ids[1:]))
    text = svg.read_text()
    assert text.startswith("<svg") and text.count("<circle") == 4


def test_errors_exit_nonzero_without_traceback(tmp_path, capsys):
    assert run("track", tmp_path / "missing.csv", "--out", tmp_path / "r.csv") != 0
    err = capsys.readouterr().err
    assert "error" in err and "Traceback" not in err
    assert not (tmp_path / "r.csv").exists()

    assert run("track", "--bogus") != 0
    assert run("frobnicate") != 0
    assert "Traceback" not in capsys.readouterr().err

    bad = tmp_path / "bad.csv"
    bad.write_text(HEADER + COLUMNS + "0,1,2\n")
    assert run("evaluate", bad, bad) == 1
    assert "line 3: expected 6 fields" in capsys.readouterr().err

    assert run("evaluate", bad) == 1  # unpaired files
    assert run("simulate", "--out", tmp_path / "x.csv") == 1  # neither config nor preset
    assert run("sweep", "--param", "max_age", "--values", 1.5, "--out", tmp_path / "s.csv") == 1
    assert not (tmp_path / "s.csv").exists()
    notjson = tmp_path / "m.json"
    notjson.write_text("{}")
    assert run("report", notjson) == 1
    assert "Traceback" not in capsys.readouterr().err


def test_module_entry_point():
    import subprocess
    import sys
    p = subprocess.run([sys.executable, "-m", "aerialtrack", "--help"], capture_output=True,
                       text=True)
    assert p.returncode == 0 and "simulate" in p.stdout
