"""Minimal deterministic SVG line plots.

Output depends only on the inputs: fixed 960x540 viewport, fixed number
formatting, no timestamps or random ids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import ParameterError

WIDTH, HEIGHT = 960, 540
MARGIN = dict(left=80, right=180, top=40, bottom=60)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2")


@dataclass(frozen=True)
class PlotStyle:
    title: str = ""
    x_label: str = "x"
    y_label: str = "y"
    log_y: bool = False
    shaded: Sequence[tuple[float, float]] = field(default_factory=tuple)
    shade_label: str = ""


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.2e}"
    return f"{v:.4g}"


def _nice_ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return out


def emit_svg(series: Mapping[str, tuple[Sequence[float], Sequence[float]]], style: PlotStyle = PlotStyle()) -> str:
    """Render named (x, y) series as polylines with a legend.

    Non-finite points are dropped; with ``log_y`` non-positive values are
    dropped too.  ``style.shaded`` lists x-intervals drawn as grey bands.
    """
    if not series:
        raise ParameterError("emit_svg needs at least one series")
    prepared = []
    for name, (xs, ys) in series.items():
        x = np.asarray(xs, dtype=float)
        y = np.asarray(ys, dtype=float)
        if x.shape != y.shape:
            raise ParameterError(f"series {name!r}: x and y lengths differ")
        ok = np.isfinite(x) & np.isfinite(y)
        if style.log_y:
            ok &= y > 0
            y = np.where(ok, np.log10(np.where(ok, y, 1.0)), 0.0)
        prepared.append((name, x[ok], y[ok]))
    allx = np.concatenate([p[1] for p in prepared])
    ally = np.concatenate([p[2] for p in prepared])
    if allx.size == 0:
        raise ParameterError("emit_svg: no finite points to draw")
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    pl, pr, pt, pb = MARGIN["left"], WIDTH - MARGIN["right"], MARGIN["top"], HEIGHT - MARGIN["bottom"]

    def sx(v):
        return pl + (v - x0) / (x1 - x0) * (pr - pl)

    def sy(v):
        return pb - (v - y0) / (y1 - y0) * (pb - pt)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    for a, b in style.shaded:
        a, b = max(min(a, b), x0), min(max(a, b), x1)
        if b > a:
            out.append(
                f'<rect class="shaded" x="{_fmt(sx(a))}" y="{pt}" width="{_fmt(sx(b) - sx(a))}" height="{pb - pt}" fill="#cccccc" fill-opacity="0.5"/>'
            )
    out.append(f'<rect x="{pl}" y="{pt}" width="{pr - pl}" height="{pb - pt}" fill="none" stroke="black"/>')
    for v in _nice_ticks(x0, x1):
        X = _fmt(sx(v))
        out.append(f'<line x1="{X}" y1="{pb}" x2="{X}" y2="{pb + 5}" stroke="black"/>')
        out.append(f'<text x="{X}" y="{pb + 20}" font-size="12" text-anchor="middle">{escape(_tick_label(v))}</text>')
    for v in _nice_ticks(y0, y1):
        Y = _fmt(sy(v))
        lab = _tick_label(10**v) if style.log_y else _tick_label(v)
        out.append(f'<line x1="{pl - 5}" y1="{Y}" x2="{pl}" y2="{Y}" stroke="black"/>')
        out.append(f'<text x="{pl - 8}" y="{Y}" font-size="12" text-anchor="end" dominant-baseline="middle">{escape(lab)}</text>')
    out.append(f'<text x="{(pl + pr) // 2}" y="{HEIGHT - 15}" font-size="14" text-anchor="middle">{escape(style.x_label)}</text>')
    out.append(
        f'<text x="20" y="{(pt + pb) // 2}" font-size="14" text-anchor="middle" transform="rotate(-90 20 {(pt + pb) // 2})">{escape(style.y_label)}</text>'
    )
    if style.title:
        out.append(f'<text x="{(pl + pr) // 2}" y="25" font-size="16" text-anchor="middle">{escape(style.title)}</text>')
    for i, (name, x, y) in enumerate(prepared):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, y))
        out.append(f'<polyline class="series" fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = pt + 20 + 22 * i
        out.append(f'<line x1="{pr + 15}" y1="{ly}" x2="{pr + 45}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text class="legend" x="{pr + 52}" y="{ly}" font-size="12" dominant-baseline="middle">{escape(name)}</text>')
    if style.shaded and style.shade_label:
        ly = pt + 20 + 22 * len(prepared)
        out.append(f'<rect x="{pr + 15}" y="{ly - 6}" width="30" height="12" fill="#cccccc" fill-opacity="0.5"/>')
        out.append(f'<text class="legend" x="{pr + 52}" y="{ly}" font-size="12" dominant-baseline="middle">{escape(style.shade_label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
