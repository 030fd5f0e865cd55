"""CSV records and hand-written SVG log-log plots."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np


class OutputError(OSError):
    pass


@dataclass(frozen=True)
class Record:
    run_id: str
    t: float
    norm_id: str
    s: float
    p: float
    r: float
    restriction: str
    value: float
    valid: bool


COLUMNS = tuple(f.name for f in fields(Record))


def _cell(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)  # shortest round-trip form, stable across runs
    return str(x)


def _ensure_dir(path: Path):
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {path}: {exc}") from exc
    if not os.access(path, os.W_OK):
        raise OutputError(f"directory {path} is not writable")


def write_csv(records, path) -> Path:
    """Rows sorted by (run_id, t, norm_id); ties keep their input order."""
    path = Path(path)
    _ensure_dir(path.parent)
    rows = sorted(records, key=lambda rec: (rec.run_id, rec.t, rec.norm_id))
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            for rec in rows:
                w.writerow([_cell(x) for x in astuple(rec)])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path) -> list[Record]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                Record(
                    row["run_id"],
                    float(row["t"]),
                    row["norm_id"],
                    float(row["s"]),
                    float(row["p"]),
                    float(row["r"]),
                    row["restriction"],
                    float(row["value"]),
                    row["valid"] == "1",
                )
            )
    return out


# --- SVG ----------------------------------------------------------------------

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2")
W, H, PAD = 640, 420, 60


def _log_ticks(lo: float, hi: float) -> list[int]:
    return list(range(math.floor(lo), math.ceil(hi) + 1))


def loglog_svg(series: dict[str, tuple[np.ndarray, np.ndarray]], targets: dict[str, float] | None = None, title: str = "") -> str:
    """Log-log plot of each (t, value) series against <t> = sqrt(1 + t^2).

    ``targets`` maps a series name to a decay exponent; a dashed guide line
    of that slope is drawn through the series' last point.
    """
    targets = targets or {}
    pts = {}
    for name, (t, v) in series.items():
        t, v = np.asarray(t, float), np.asarray(v, float)
        keep = (v > 0) & np.isfinite(v)
        if keep.any():
            pts[name] = (np.log10(np.sqrt(1 + t[keep] ** 2)), np.log10(v[keep]))
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">']
    out.append(f'<rect width="{W}" height="{H}" fill="white"/>')
    out.append(f'<text x="{W / 2}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{escape(title)}</text>')
    if not pts:
        out.append(f'<text x="{W / 2}" y="{H / 2}" text-anchor="middle" font-family="sans-serif">no positive data</text></svg>')
        return "\n".join(out) + "\n"
    xs = np.concatenate([p[0] for p in pts.values()])
    ys = np.concatenate([p[1] for p in pts.values()])
    x0, x1 = float(xs.min()), max(float(xs.max()), float(xs.min()) + 1e-9)
    y0, y1 = math.floor(float(ys.min())), math.ceil(float(ys.max()))
    y1 = max(y1, y0 + 1)

    def sx(x):
        return PAD + (x - x0) / (x1 - x0) * (W - 2 * PAD)

    def sy(y):
        return H - PAD - (y - y0) / (y1 - y0) * (H - 2 * PAD)

    out.append(f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" fill="none" stroke="black"/>')
    for e in _log_ticks(x0, x1):
        if x0 <= e <= x1:
            out.append(f'<text x="{sx(e):.1f}" y="{H - PAD + 16}" text-anchor="middle" font-family="sans-serif" font-size="11">1e{e}</text>')
    for e in _log_ticks(y0, y1):
        out.append(f'<text x="{PAD - 6}" y="{sy(e) + 4:.1f}" text-anchor="end" font-family="sans-serif" font-size="11">1e{e}</text>')
    out.append(f'<text x="{W / 2}" y="{H - 15}" text-anchor="middle" font-family="sans-serif" font-size="12">&lt;t&gt;</text>')
    for i, (name, (x, y)) in enumerate(sorted(pts.items())):
        color = PALETTE[i % len(PALETTE)]
        path = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{path}"/>')
        if name in targets and len(x) > 1:
            xe, ye = x[-1], y[-1]
            xs_ = x[0]
            ys_ = ye + targets[name] * (xe - xs_)
            out.append(
                f'<line x1="{sx(xs_):.2f}" y1="{sy(ys_):.2f}" x2="{sx(xe):.2f}" y2="{sy(ye):.2f}" '
                f'stroke="{color}" stroke-dasharray="5,4" stroke-width="1"/>'
            )
        label = escape(name) + (f" (target {targets[name]:g})" if name in targets else "")
        out.append(f'<text x="{PAD + 8}" y="{PAD + 16 + 14 * i}" font-family="sans-serif" font-size="11" fill="{color}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, series, targets=None, title: str = "") -> Path:
    path = Path(path)
    _ensure_dir(path.parent)
    try:
        path.write_text(loglog_svg(series, targets, title))
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def plot_records(records, out_dir, targets: dict[str, float] | None = None) -> list[Path]:
    """One SVG per run_id with every norm_id as a series (valid rows only)."""
    by_run: dict[str, dict[str, list]] = {}
    for rec in sorted(records, key=lambda r: (r.run_id, r.t, r.norm_id)):
        if rec.valid:
            by_run.setdefault(rec.run_id, {}).setdefault(rec.norm_id, []).append((rec.t, rec.value))
    paths = []
    for run_id, series in by_run.items():
        arrays = {k: (np.array([a for a, _ in v]), np.array([b for _, b in v])) for k, v in series.items()}
        safe = "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in run_id)
        paths.append(write_svg(Path(out_dir) / f"{safe}.svg", arrays, targets, run_id))
    return paths
