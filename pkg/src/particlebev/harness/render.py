"""Plain-text image and vector outputs: ASCII portable graymap for heatmap
rasters, hand-written SVG for line charts and heatmap cell grids. No
plotting dependency; everything is deterministic given the inputs.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

_SERIES_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                  "#8c564b", "#e377c2", "#7f7f7f")


def write_pgm(values: np.ndarray, path: str | Path, max_gray: int = 255) -> None:
    """ASCII (P2) graymap; values are min-max normalized, row 0 at the top."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2:
        raise ValueError("graymap needs a 2-D array")
    lo, hi = float(arr.min()), float(arr.max())
    span = hi - lo
    norm = (arr - lo) / span if span > 0 else np.zeros_like(arr)
    gray = np.rint(norm * max_gray).astype(int)
    lines = ["P2", f"{arr.shape[1]} {arr.shape[0]}", f"{max_gray}"]
    # top row of the file is the top of the image: flip the y-up grid
    for row in gray[::-1]:
        lines.append(" ".join(str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min(s * mag for s in (1, 2, 5, 10) if s * mag >= raw)
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-9 * step:
        out.append(round(t, 12))
        t += step
    return out or [lo]


def write_svg_lines(series: list[tuple[str, np.ndarray, np.ndarray]],
                    path: str | Path, title: str = "", x_label: str = "",
                    y_label: str = "", log_y: bool = False,
                    width: int = 640, height: int = 420) -> None:
    """Line chart from (label, xs, ys) series with axes, ticks, and legend."""
    if not series:
        raise ValueError("need at least one series")
    ml, mr, mt, mb = 64, 16, 28, 44
    pw, ph = width - ml - mr, height - mt - mb

    def prep(ys):
        ys = np.asarray(ys, dtype=float)
        if log_y:
            ys = np.log10(np.maximum(ys, 1e-12))
        return ys

    all_x = np.concatenate([np.asarray(xs, dtype=float) for _, xs, _ in series])
    all_y = np.concatenate([prep(ys) for _, _, ys in series])
    x_lo, x_hi = float(all_x.min()), float(all_x.max())
    y_lo, y_hi = float(all_y.min()), float(all_y.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(x):
        return ml + (x - x_lo) / (x_hi - x_lo) * pw

    def sy(y):
        return mt + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        parts.append(f'<text x="{width / 2:.1f}" y="18" text-anchor="middle">{title}</text>')
    for tx in _ticks(x_lo, x_hi):
        parts.append(f'<line x1="{sx(tx):.1f}" y1="{mt + ph}" x2="{sx(tx):.1f}" '
                     f'y2="{mt + ph + 4}" stroke="black"/>')
        parts.append(f'<text x="{sx(tx):.1f}" y="{mt + ph + 16}" '
                     f'text-anchor="middle">{tx:g}</text>')
    for ty in _ticks(y_lo, y_hi):
        label = f"1e{ty:g}" if log_y else f"{ty:g}"
        parts.append(f'<line x1="{ml - 4}" y1="{sy(ty):.1f}" x2="{ml}" '
                     f'y2="{sy(ty):.1f}" stroke="black"/>')
        parts.append(f'<text x="{ml - 6}" y="{sy(ty) + 3:.1f}" '
                     f'text-anchor="end">{label}</text>')
    if x_label:
        parts.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 8}" '
                     f'text-anchor="middle">{x_label}</text>')
    if y_label:
        parts.append(f'<text x="14" y="{mt + ph / 2:.1f}" text-anchor="middle" '
                     f'transform="rotate(-90 14 {mt + ph / 2:.1f})">{y_label}</text>')
    for k, (label, xs, ys) in enumerate(series):
        color = _SERIES_COLORS[k % len(_SERIES_COLORS)]
        ys = prep(ys)
        pts = " ".join(f"{sx(float(x)):.2f},{sy(float(y)):.2f}"
                       for x, y in zip(np.asarray(xs, dtype=float), ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        ly = mt + 14 + 14 * k
        parts.append(f'<line x1="{ml + pw - 120}" y1="{ly - 4}" x2="{ml + pw - 100}" '
                     f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{ml + pw - 96}" y="{ly}">{label}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def write_svg_heatmap(values: np.ndarray, path: str | Path, title: str = "",
                      cell_px: int = 4, min_visible: float = 1e-3) -> None:
    """Heatmap as a grid of gray cells; near-zero cells are left background.

    Row 0 of `values` is the bottom of the chart (y grows upward).
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2:
        raise ValueError("heatmap needs a 2-D array")
    gh, gw = arr.shape
    lo, hi = float(arr.min()), float(arr.max())
    span = hi - lo if hi > lo else 1.0
    mt = 24 if title else 4
    width, height = gw * cell_px + 8, gh * cell_px + mt + 4
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{width / 2:.1f}" y="15" text-anchor="middle">{title}</text>')
    for i in range(gh):
        y = mt + (gh - 1 - i) * cell_px
        for j in range(gw):
            v = (arr[i, j] - lo) / span
            if v < min_visible:
                continue
            shade = int(round(255 * (1.0 - v)))
            parts.append(f'<rect x="{4 + j * cell_px}" y="{y}" width="{cell_px}" '
                         f'height="{cell_px}" fill="rgb({shade},{shade},{shade})"/>')
    parts.append(f'<rect x="4" y="{mt}" width="{gw * cell_px}" height="{gh * cell_px}" '
                 f'fill="none" stroke="black"/>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
