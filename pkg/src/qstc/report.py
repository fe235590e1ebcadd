"""CSV and minimal hand-written SVG output.

Every file starts with a line carrying the config hash. Floats are written
with ``repr`` precision so identical runs give byte-identical files.
"""
from __future__ import annotations

import math
import os
from typing import Iterable, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def header_line(config_hash: str, comment: str = "#") -> str:
    return f"{comment} qstc config_hash={config_hash}"


def write_csv(path, config_hash: str, columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(header_line(config_hash) + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def write_text(path, config_hash: str, text: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(header_line(config_hash) + "\n")
        fh.write(text if text.endswith("\n") else text + "\n")
    return path


def _ticks(lo, hi, n=5):
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 12))
        v += step
    return out


def _label(v):
    return f"{v:.4g}"


def line_chart(path, config_hash: str, series, title: str = "", xlabel: str = "",
               ylabel: str = "", width: int = 640, height: int = 400, markers: bool = False,
               fill_between: Optional[tuple] = None) -> str:
    """Write an SVG line chart.

    ``series`` is a list of ``(label, x, y)``. ``fill_between`` optionally
    names two series indices whose gap is shaded where the second lies
    above the first.
    """
    ml, mr, mt, mb = 70, 20, 40, 50
    pw, ph = width - ml - mr, height - mt - mb
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    ys = ys[np.isfinite(ys)]
    x0, x1 = float(np.min(xs)), float(np.max(xs))
    y0, y1 = (float(np.min(ys)), float(np.max(ys))) if ys.size else (0.0, 1.0)
    if x1 <= x0:
        x1 = x0 + 1.0
    if y1 <= y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def X(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def Y(v):
        return mt + (y1 - v) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f"<!-- qstc config_hash={config_hash} -->",
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if fill_between is not None:
        i, j = fill_between
        xa = np.asarray(series[i][1], float)
        lo = np.asarray(series[i][2], float)
        hi = np.asarray(series[j][2], float)
        ok = hi > lo
        if np.any(ok):
            top = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(xa[ok], hi[ok]))
            bot = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(xa[ok][::-1], lo[ok][::-1]))
            out.append(f'<polygon points="{top} {bot}" fill="#cfe3f5" stroke="none"/>')
    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for v in _ticks(x0, x1):
        out.append(f'<line x1="{X(v):.2f}" y1="{mt + ph}" x2="{X(v):.2f}" y2="{mt + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{X(v):.2f}" y="{mt + ph + 16}" text-anchor="middle">{_label(v)}</text>')
    for v in _ticks(y0, y1):
        out.append(f'<line x1="{ml - 4}" y1="{Y(v):.2f}" x2="{ml}" y2="{Y(v):.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 6}" y="{Y(v) + 4:.2f}" text-anchor="end">{_label(v)}</text>')
    if title:
        out.append(f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{ml + pw / 2}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="14" y="{mt + ph / 2}" text-anchor="middle" '
                   f'transform="rotate(-90 14 {mt + ph / 2})">{escape(ylabel)}</text>')
    for n, (label, xv, yv) in enumerate(series):
        color = PALETTE[n % len(PALETTE)]
        xv = np.asarray(xv, float)
        yv = np.asarray(yv, float)
        ok = np.isfinite(yv)
        pts = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(xv[ok], yv[ok]))
        if markers:
            for a, b in zip(xv[ok], yv[ok]):
                out.append(f'<circle cx="{X(a):.2f}" cy="{Y(b):.2f}" r="2" fill="{color}"/>')
        else:
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = mt + 14 + 16 * n
        out.append(f'<line x1="{ml + pw - 120}" y1="{ly - 4}" x2="{ml + pw - 100}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw - 95}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
    return path
