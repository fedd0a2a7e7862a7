"""Minimal static SVG line charts."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]


def _ticks(lo, hi, count=5):
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def line_chart(series, title, xlabel, ylabel, logx=False, logy=False,
               width=640, height=420) -> str:
    """``series`` is a list of (label, xs, ys); non-finite or non-positive
    (on log axes) points are dropped."""
    left, right, top, bottom = 70, 150, 40, 55

    def tx(v):
        return math.log10(v) if logx else v

    def ty(v):
        return math.log10(v) if logy else v

    pts = []
    for label, xs, ys in series:
        keep = [(tx(x), ty(y)) for x, y in zip(xs, ys)
                if math.isfinite(x) and math.isfinite(y)
                and (not logx or x > 0) and (not logy or y > 0)]
        pts.append((label, keep))
    allx = [x for _, p in pts for x, _ in p] or [0.0, 1.0]
    ally = [y for _, p in pts for _, y in p] or [0.0, 1.0]
    x0, x1 = min(allx), max(allx)
    y0, y1 = min(ally), max(ally)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pw, ph = width - left - right, height - top - bottom

    def sx(v):
        return left + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return top + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">'
           f'{escape(title)}</text>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>']
    for v in _ticks(x0, x1):
        lab = f"{10 ** v:.3g}" if logx else f"{v:.3g}"
        out.append(f'<text x="{sx(v):.1f}" y="{top + ph + 18}" text-anchor="middle">{lab}</text>')
    for v in _ticks(y0, y1):
        lab = f"1e{v:.2g}" if logy else f"{v:.3g}"
        out.append(f'<text x="{left - 6}" y="{sy(v) + 4:.1f}" text-anchor="end">{lab}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">'
               f'{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (label, p) in enumerate(pts):
        color = PALETTE[i % len(PALETTE)]
        if p:
            path = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in p)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{path}"/>')
            out.extend(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{color}"/>'
                       for x, y in p)
        ly = top + 16 + 18 * i
        out.append(f'<line x1="{left + pw + 12}" y1="{ly - 4}" x2="{left + pw + 32}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 38}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
