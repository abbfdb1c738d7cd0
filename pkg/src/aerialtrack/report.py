"""Rendering of evaluation results: console table, metrics JSON, markdown, sweep CSV and SVG."""

from __future__ import annotations

import csv
import io
import json
from typing import List, Optional, Sequence, Tuple

from .metrics import MetricsReport

# column order of the console and markdown tables
TABLE_COLUMNS = ("IDF1", "IDP", "IDR", "Rcll", "Prcn", "FAR", "MT", "PT", "ML",
                 "FP", "FN", "IDS", "FM", "MOTA", "MOTP", "MOTAL")
# ratio metrics shown as percentages in tables (JSON keeps the raw ratio)
_PERCENT = {"IDF1", "IDP", "IDR", "Rcll", "Prcn", "MOTA", "MOTAL"}
_COUNTS = {"FP", "FN", "IDS", "FM"}


def format_value(name: str, value) -> str:
    if value is None:
        return "-"
    if name in _COUNTS:
        return str(int(value))
    if name in _PERCENT:
        return f"{100.0 * value:.1f}"
    if name == "FAR":
        return f"{value:.2f}"
    return f"{value:.1f}"


def _rows(named: Sequence[Tuple[str, dict]]) -> List[List[str]]:
    return [[name] + [format_value(c, m[c]) for c in TABLE_COLUMNS] for name, m in named]


def render_table(named: Sequence[Tuple[str, dict]]) -> str:
    """Fixed-width text table, one row per (name, metrics dict)."""
    header = ["Sequence"] + list(TABLE_COLUMNS)
    rows = _rows(named)
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = []
    for r in [header] + rows:
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def render_markdown(named: Sequence[Tuple[str, dict]], title: Optional[str] = None) -> str:
    header = ["Sequence"] + list(TABLE_COLUMNS)
    out = []
    if title:
        out += [f"# {title}", ""]
    out.append("| " + " | ".join(header) + " |")
    out.append("|" + "|".join(["---"] + ["---:"] * len(TABLE_COLUMNS)) + "|")
    for r in _rows(named):
        out.append("| " + " | ".join(r) + " |")
    out += ["", "Ratios (IDF1, IDP, IDR, Rcll, Prcn, MOTA, MOTAL) in percent; MT/PT/ML in percent "
            "of ground-truth trajectories; FAR is false positives per frame; '-' marks an "
            "undefined value."]
    return "\n".join(out) + "\n"


def metrics_document(sequences: Sequence[Tuple[str, MetricsReport]], total: MetricsReport,
                     settings: dict) -> dict:
    return {
        "settings": settings,
        "sequences": [{"name": name, "metrics": rep.to_dict()} for name, rep in sequences],
        "total": total.to_dict(),
    }


def dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def document_rows(doc: dict) -> List[Tuple[str, dict]]:
    """(name, metrics) rows of a metrics document, the merged total last."""
    try:
        rows = [(s["name"], s["metrics"]) for s in doc["sequences"]]
        rows.append(("total", doc["total"]))
        for _, m in rows:
            missing = [c for c in TABLE_COLUMNS if c not in m]
            if missing:
                raise ValueError(f"metrics entry lacks fields {missing}")
    except (KeyError, TypeError) as e:
        raise ValueError(f"not a metrics document: missing {e}") from None
    return rows


# -- sweeps -----------------------------------------------------------------

SWEEP_COLUMNS = ("value", "IDS", "FP", "FN", "FM", "MOTA", "IDF1", "MOTP")


def sweep_csv(param: str, results: Sequence[Tuple[float, MetricsReport]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow((param,) + SWEEP_COLUMNS[1:])
    for value, rep in results:
        d = rep.to_dict()
        w.writerow([repr(float(value))] + ["" if d[c] is None else d[c] for c in SWEEP_COLUMNS[1:]])
    return buf.getvalue()


def sweep_svg(param: str, metric: str, points: Sequence[Tuple[float, float]],
              width: int = 480, height: int = 320) -> str:
    """Minimal line plot of ``metric`` against ``param`` as standalone SVG text."""
    if not points:
        raise ValueError("nothing to plot")
    left, right, top, bottom = 60, 20, 20, 40
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(0.0, min(ys)), max(ys)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0

    def sx(x):
        return left + (x - x_lo) / x_span * (width - left - right)

    def sy(y):
        return height - bottom - (y - y_lo) / y_span * (height - top - bottom)

    poly = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in points)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" y2="{height - bottom}" '
        'stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="black"/>',
        f'<polyline points="{poly}" fill="none" stroke="steelblue" stroke-width="2"/>',
    ]
    for x, y in points:
        out.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="steelblue"/>')
        out.append(f'<text x="{sx(x):.1f}" y="{height - bottom + 15}" font-size="11" '
                   f'text-anchor="middle">{x:g}</text>')
        out.append(f'<text x="{sx(x):.1f}" y="{sy(y) - 6:.1f}" font-size="11" '
                   f'text-anchor="middle">{y:g}</text>')
    out.append(f'<text x="{(left + width - right) / 2:.1f}" y="{height - 5}" font-size="12" '
               f'text-anchor="middle">{param}</text>')
    out.append(f'<text x="15" y="{(top + height - bottom) / 2:.1f}" font-size="12" '
               f'text-anchor="middle" transform="rotate(-90 15 {(top + height - bottom) / 2:.1f})">'
               f'{metric}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
