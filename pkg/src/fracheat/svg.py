"""Self-contained SVG line plots with the data embedded as circles."""

from __future__ import annotations

import math
from html import escape

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=80, right=160, top=40, bottom=60)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _ticks(lo, hi, count=5):
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * k / (count - 1) for k in range(count)]


def line_plot(series, title: str, xlabel: str, ylabel: str,
              logx: bool = True, logy: bool = True) -> str:
    """Render ``series`` (a list of ``(label, xs, ys)``) as an SVG document.

    Points that cannot be shown on a log axis (nonpositive or non-finite)
    are dropped.
    """
    fx = (lambda v: math.log10(v)) if logx else (lambda v: v)
    fy = (lambda v: math.log10(v)) if logy else (lambda v: v)

    def ok(v, log):
        return math.isfinite(v) and (v > 0 or not log)

    clean = []
    for label, xs, ys in series:
        pts = [(fx(x), fy(y), x, y) for x, y in zip(xs, ys) if ok(x, logx) and ok(y, logy)]
        clean.append((label, pts))
    allx = [p[0] for _, pts in clean for p in pts]
    ally = [p[1] for _, pts in clean for p in pts]
    if not allx:
        allx, ally = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = min(allx), max(allx)
    y0, y1 = min(ally), max(ally)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        return MARGIN["left"] + pw * (v - x0) / (x1 - x0)

    def py(v):
        return MARGIN["top"] + ph * (1.0 - (v - y0) / (y1 - y0))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f"<title>{escape(title)}</title>",
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    for v in _ticks(x0, x1):
        label = f"1e{v:.2g}" if logx else f"{v:.4g}"
        out.append(f'<line x1="{px(v):.2f}" y1="{MARGIN["top"] + ph}" x2="{px(v):.2f}" '
                   f'y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(v):.2f}" y="{MARGIN["top"] + ph + 18}" '
                   f'text-anchor="middle">{escape(label)}</text>')
    for v in _ticks(y0, y1):
        label = f"1e{v:.3g}" if logy else f"{v:.4g}"
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{py(v):.2f}" x2="{MARGIN["left"]}" '
                   f'y2="{py(v):.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{py(v) + 4:.2f}" '
                   f'text-anchor="end">{escape(label)}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 15}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text transform="translate(18,{MARGIN["top"] + ph / 2:.1f}) rotate(-90)" '
               f'text-anchor="middle">{escape(ylabel)}</text>')
    for i, (label, pts) in enumerate(clean):
        color = COLORS[i % len(COLORS)]
        if len(pts) > 1:
            path = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b, _, _ in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for a, b, x, y in pts:
            out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="3" fill="{color}">'
                       f"<title>{escape(label)}: ({x:.17g}, {y:.17g})</title></circle>")
        ly = MARGIN["top"] + 16 * (i + 1)
        lx = WIDTH - MARGIN["right"] + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" stroke="{color}" '
                   'stroke-width="2"/>')
        out.append(f'<text x="{lx + 24}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
