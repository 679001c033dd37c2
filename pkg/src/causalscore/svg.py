"""Minimal SVG 1.1 writer for line charts and heatmaps.

Output is deterministic text: numbers are printed with a fixed precision
and no timestamps or random ids are emitted.
"""

from __future__ import annotations

import math
from html import escape
from typing import Optional, Sequence

import numpy as np

WIDTH, HEIGHT = 640, 440
MARGIN = dict(left=72, right=24, top=40, bottom=56)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
# viridis anchor colours, interpolated linearly
_RAMP = ((68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37))


def _f(v: float) -> str:
    s = f"{v:.2f}"
    return s.rstrip("0").rstrip(".") if "." in s else s


def _header(width, height, title):
    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" '
        'font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text class="title" x="{_f(width / 2)}" y="22" text-anchor="middle" '
                   f'font-size="15">{escape(title)}</text>')
    return out


def nice_ticks(lo: float, hi: float, count: int = 5) -> list:
    """Round tick positions covering ``[lo, hi]``."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return []
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(count, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    v = start
    while v <= hi + step * 1e-9:
        ticks.append(0.0 if abs(v) < step * 1e-9 else v)
        v += step
    return ticks


def _tick_label(v: float) -> str:
    return f"{v:.4g}"


class _Frame:
    def __init__(self, xlim, ylim, width=WIDTH, height=HEIGHT, right=MARGIN["right"]):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        self.left = MARGIN["left"]
        self.right = width - right
        self.top = MARGIN["top"]
        self.bottom = height - MARGIN["bottom"]

    def px(self, x):
        span = self.x1 - self.x0 or 1.0
        return self.left + (x - self.x0) / span * (self.right - self.left)

    def py(self, y):
        span = self.y1 - self.y0 or 1.0
        return self.bottom - (y - self.y0) / span * (self.bottom - self.top)

    def axes(self, xlabel, ylabel, xticks=None, yticks=None):
        out = ['<g class="axes" stroke="black" stroke-width="1">',
               f'<line x1="{_f(self.left)}" y1="{_f(self.bottom)}" x2="{_f(self.right)}" '
               f'y2="{_f(self.bottom)}"/>',
               f'<line x1="{_f(self.left)}" y1="{_f(self.top)}" x2="{_f(self.left)}" '
               f'y2="{_f(self.bottom)}"/>', '</g>']
        xticks = nice_ticks(self.x0, self.x1) if xticks is None else xticks
        yticks = nice_ticks(self.y0, self.y1) if yticks is None else yticks
        for v in xticks:
            x = self.px(v)
            out.append(f'<line x1="{_f(x)}" y1="{_f(self.bottom)}" x2="{_f(x)}" '
                       f'y2="{_f(self.bottom + 5)}" stroke="black"/>')
            out.append(f'<text x="{_f(x)}" y="{_f(self.bottom + 18)}" '
                       f'text-anchor="middle">{escape(_tick_label(v))}</text>')
        for v in yticks:
            y = self.py(v)
            out.append(f'<line x1="{_f(self.left - 5)}" y1="{_f(y)}" x2="{_f(self.left)}" '
                       f'y2="{_f(y)}" stroke="black"/>')
            out.append(f'<text x="{_f(self.left - 8)}" y="{_f(y + 4)}" '
                       f'text-anchor="end">{escape(_tick_label(v))}</text>')
        mid_x = (self.left + self.right) / 2
        mid_y = (self.top + self.bottom) / 2
        out.append(f'<text class="xlabel" x="{_f(mid_x)}" y="{_f(self.bottom + 40)}" '
                   f'text-anchor="middle">{escape(xlabel)}</text>')
        out.append(f'<text class="ylabel" x="18" y="{_f(mid_y)}" text-anchor="middle" '
                   f'transform="rotate(-90 18 {_f(mid_y)})">{escape(ylabel)}</text>')
        return out


def _limits(values, pad=0.05):
    v = np.asarray([x for x in values if math.isfinite(x)], dtype=float)
    if v.size == 0:
        return 0.0, 1.0
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return lo - 0.5, hi + 0.5
    span = hi - lo
    return lo - pad * span, hi + pad * span


def _segments(xs, ys):
    """Split a series at non-finite values so gaps are not bridged."""
    seg = []
    for x, y in zip(xs, ys):
        if math.isfinite(x) and math.isfinite(y):
            seg.append((x, y))
        elif seg:
            yield seg
            seg = []
    if seg:
        yield seg


def line_chart(series: Sequence[tuple], title: str = "", xlabel: str = "x",
               ylabel: str = "y", hlines: Sequence[float] = (), vlines: Sequence[float] = (),
               xlim: Optional[tuple] = None, ylim: Optional[tuple] = None,
               markers: bool = False) -> str:
    """Render ``(label, xs, ys)`` series as polylines with a legend.

    With ``markers`` each point is drawn as a small circle instead.
    """
    all_x = [float(x) for _, xs, _ in series for x in xs]
    all_y = [float(y) for _, _, ys in series for y in ys] + [float(h) for h in hlines]
    frame = _Frame(xlim or _limits(all_x, pad=0.0), ylim or _limits(all_y))
    out = _header(WIDTH, HEIGHT, title)
    out += frame.axes(xlabel, ylabel)
    for h in hlines:
        y = frame.py(h)
        out.append(f'<line class="guide" x1="{_f(frame.left)}" y1="{_f(y)}" '
                   f'x2="{_f(frame.right)}" y2="{_f(y)}" stroke="gray" stroke-dasharray="5,4"/>')
    for v in vlines:
        x = frame.px(v)
        out.append(f'<line class="guide" x1="{_f(x)}" y1="{_f(frame.top)}" x2="{_f(x)}" '
                   f'y2="{_f(frame.bottom)}" stroke="gray" stroke-dasharray="5,4"/>')
    for k, (label, xs, ys) in enumerate(series):
        colour = PALETTE[k % len(PALETTE)]
        for seg in _segments([float(x) for x in xs], [float(y) for y in ys]):
            if markers:
                out += [f'<circle class="point" cx="{_f(frame.px(x))}" cy="{_f(frame.py(y))}" '
                        f'r="2" fill="{colour}" fill-opacity="0.6"/>' for x, y in seg]
                continue
            pts = " ".join(f"{_f(frame.px(x))},{_f(frame.py(y))}" for x, y in seg)
            out.append(f'<polyline class="series" fill="none" stroke="{colour}" '
                       f'stroke-width="1.8" points="{pts}"/>')
        ly = frame.top + 8 + 16 * k
        lx = frame.left + 12
        out.append(f'<g class="legend"><line x1="{_f(lx)}" y1="{_f(ly)}" x2="{_f(lx + 20)}" '
                   f'y2="{_f(ly)}" stroke="{colour}" stroke-width="2"/>'
                   f'<text x="{_f(lx + 26)}" y="{_f(ly + 4)}">{escape(str(label))}</text></g>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def ramp_colour(t: float) -> str:
    """Hex colour for ``t`` in [0, 1] on a viridis-like ramp; NaN maps to grey."""
    if not math.isfinite(t):
        return "#cccccc"
    t = min(max(t, 0.0), 1.0) * (len(_RAMP) - 1)
    i = min(int(t), len(_RAMP) - 2)
    w = t - i
    rgb = [round(a + (b - a) * w) for a, b in zip(_RAMP[i], _RAMP[i + 1])]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def heatmap(grid, row_labels: Sequence, col_labels: Sequence, title: str = "",
            xlabel: str = "column", ylabel: str = "row", vmin: Optional[float] = None,
            vmax: Optional[float] = None, annotate: bool = True) -> str:
    """Render a 2-d grid; row 0 is drawn at the bottom.

    Each cell is a ``<rect class="cell">``. A colour legend with
    ``<rect class="legend-step">`` swatches sits to the right.
    """
    g = np.asarray(grid, dtype=float)
    if g.ndim != 2 or g.shape != (len(row_labels), len(col_labels)):
        raise ValueError("grid shape does not match the labels")
    finite = g[np.isfinite(g)]
    lo = float(finite.min()) if vmin is None and finite.size else (vmin if vmin is not None else 0.0)
    hi = float(finite.max()) if vmax is None and finite.size else (vmax if vmax is not None else 1.0)
    span = hi - lo or 1.0
    n_rows, n_cols = g.shape
    legend_w = 90
    frame = _Frame((0, n_cols), (0, n_rows), right=MARGIN["right"] + legend_w)
    out = _header(WIDTH, HEIGHT, title)
    cw = (frame.right - frame.left) / n_cols
    ch = (frame.bottom - frame.top) / n_rows
    for i in range(n_rows):
        for j in range(n_cols):
            v = g[i, j]
            x = frame.px(j)
            y = frame.py(i + 1)
            out.append(f'<rect class="cell" x="{_f(x)}" y="{_f(y)}" width="{_f(cw)}" '
                       f'height="{_f(ch)}" fill="{ramp_colour((v - lo) / span)}">'
                       f'<title>{escape(f"{v:.4g}")}</title></rect>')
            if annotate and math.isfinite(v):
                shade = "black" if (v - lo) / span > 0.6 else "white"
                out.append(f'<text x="{_f(x + cw / 2)}" y="{_f(y + ch / 2 + 4)}" '
                           f'text-anchor="middle" fill="{shade}">{v:.2f}</text>')
    out += frame.axes(xlabel, ylabel, xticks=[], yticks=[])
    for j, lab in enumerate(col_labels):
        out.append(f'<text x="{_f(frame.px(j + 0.5))}" y="{_f(frame.bottom + 18)}" '
                   f'text-anchor="middle">{escape(str(lab))}</text>')
    for i, lab in enumerate(row_labels):
        out.append(f'<text x="{_f(frame.left - 8)}" y="{_f(frame.py(i + 0.5) + 4)}" '
                   f'text-anchor="end">{escape(str(lab))}</text>')
    steps = 10
    lx = frame.right + 24
    sh = (frame.bottom - frame.top) / steps
    out.append('<g class="legend">')
    for s in range(steps):
        y = frame.bottom - (s + 1) * sh
        out.append(f'<rect class="legend-step" x="{_f(lx)}" y="{_f(y)}" width="18" '
                   f'height="{_f(sh)}" fill="{ramp_colour((s + 0.5) / steps)}"/>')
    out.append(f'<text x="{_f(lx + 24)}" y="{_f(frame.bottom)}">{escape(f"{lo:.3g}")}</text>')
    out.append(f'<text x="{_f(lx + 24)}" y="{_f(frame.top + 10)}">{escape(f"{hi:.3g}")}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
