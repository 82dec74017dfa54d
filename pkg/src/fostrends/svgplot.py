"""Deterministic SVG charts for the growth-share matrix and the life-cycle curve.

Output depends only on the data: fixed canvas, fixed number formatting,
elements ordered by field id.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence
from xml.sax.saxutils import escape, quoteattr

from fostrends.trends import GrowthShareMatrix, LifecyclePoint

WIDTH, HEIGHT = 900, 640
MARGIN = 70

QUADRANT_COLORS = {
    "trending-star": "#d62728",
    "foundational": "#1f77b4",
    "rising-question-mark": "#ff7f0e",
    "niche": "#7f7f7f",
}


def _f(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


class _Canvas:
    def __init__(self, title: str):
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
            f'<text x="{WIDTH // 2}" y="28" text-anchor="middle" font-size="16">{escape(title)}</text>',
        ]

    def add(self, s: str):
        self.parts.append(s)

    def text(self, x, y, s, anchor="start", **attrs):
        extra = "".join(f" {k.replace('_', '-')}={quoteattr(str(v))}" for k, v in sorted(attrs.items()))
        self.add(f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}"{extra}>{escape(s)}</text>')

    def line(self, x1, y1, x2, y2, stroke="#000000", dash=None):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.add(
            f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" stroke="{stroke}"{d}/>'
        )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


class _Scale:
    def __init__(self, lo: float, hi: float, out_lo: float, out_hi: float, pad: float = 0.05):
        if hi == lo:
            lo, hi = lo - 1, hi + 1
        span = hi - lo
        self.lo, self.hi = lo - pad * span, hi + pad * span
        self.out_lo, self.out_hi = out_lo, out_hi

    def __call__(self, v: float) -> float:
        return self.out_lo + (v - self.lo) / (self.hi - self.lo) * (self.out_hi - self.out_lo)


def _axes(c: _Canvas, xlabel: str, ylabel: str):
    left, right, top, bottom = MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN
    c.line(left, bottom, right, bottom)
    c.line(left, bottom, left, top)
    c.text((left + right) / 2, HEIGHT - 25, xlabel, anchor="middle")
    c.add(
        f'<text x="20" y="{_f((top + bottom) / 2)}" text-anchor="middle" '
        f'transform="rotate(-90 20 {_f((top + bottom) / 2)})">{escape(ylabel)}</text>'
    )


def _ticks(c: _Canvas, sx: _Scale, sy: _Scale, xs: Sequence[float], ys: Sequence[float]):
    bottom, left = HEIGHT - MARGIN, MARGIN
    for v in xs:
        c.line(sx(v), bottom, sx(v), bottom + 5)
        c.text(sx(v), bottom + 18, f"{v:g}", anchor="middle")
    for v in ys:
        c.line(left - 5, sy(v), left, sy(v))
        c.text(left - 8, sy(v) + 4, f"{v:g}", anchor="end")


def quadrant_svg(matrix: GrowthShareMatrix, names: Mapping[str, str] | None = None) -> str:
    """Scatter of transformed total (x) against transformed growth (y)."""
    names = names or {}
    pts = sorted(matrix.points, key=lambda p: p.field_id)
    xs = [p.tf_total for p in pts] + [matrix.total_cut]
    ys = [p.tf_growth for p in pts] + [matrix.growth_cut]
    sx = _Scale(min(xs), max(xs), MARGIN, WIDTH - MARGIN)
    sy = _Scale(min(ys), max(ys), HEIGHT - MARGIN, MARGIN)
    c = _Canvas("Growth-share matrix")
    _axes(
        c,
        f"total papers (Yeo-Johnson, λ={matrix.total_params.lmbda:.4f})",
        f"growth rate (Yeo-Johnson, λ={matrix.growth_params.lmbda:.4f})",
    )
    c.line(sx(matrix.total_cut), HEIGHT - MARGIN, sx(matrix.total_cut), MARGIN, "#999999", "4 4")
    c.line(MARGIN, sy(matrix.growth_cut), WIDTH - MARGIN, sy(matrix.growth_cut), "#999999", "4 4")
    corners = {
        "rising-question-mark": (MARGIN + 8, MARGIN + 14, "start"),
        "trending-star": (WIDTH - MARGIN - 8, MARGIN + 14, "end"),
        "niche": (MARGIN + 8, HEIGHT - MARGIN - 8, "start"),
        "foundational": (WIDTH - MARGIN - 8, HEIGHT - MARGIN - 8, "end"),
    }
    for q, (x, y, anchor) in corners.items():
        c.text(x, y, q, anchor=anchor, fill=QUADRANT_COLORS[q], font_size=13)
    for p in pts:
        x, y = sx(p.tf_total), sy(p.tf_growth)
        color = QUADRANT_COLORS[p.quadrant]
        c.add(f'<g class="field" data-field={quoteattr(p.field_id)} data-quadrant="{p.quadrant}">')
        c.add(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="5" fill="{color}"/>')
        c.text(x + 7, y - 6, names.get(p.field_id, p.field_id))
        c.add("</g>")
    return c.render()


def lifecycle_svg(points: Sequence[LifecyclePoint], names: Mapping[str, str] | None = None, bounds=(-5.0, 5.0)) -> str:
    """Logistic curve over ``bounds`` with one marker per field at (x_norm, y)."""
    names = names or {}
    lo, hi = bounds
    sx = _Scale(lo, hi, MARGIN, WIDTH - MARGIN, pad=0.03)
    sy = _Scale(0.0, 1.0, HEIGHT - MARGIN, MARGIN, pad=0.03)
    c = _Canvas("Innovation life cycle")
    _axes(c, "normalized position x'", "y = 1 / (1 + exp(-x'))")
    _ticks(c, sx, sy, [lo + i * (hi - lo) / 10 for i in range(11)], [0, 0.25, 0.5, 0.75, 1])
    curve = []
    for i in range(201):
        xv = lo + (hi - lo) * i / 200
        curve.append(f"{_f(sx(xv))},{_f(sy(1 / (1 + math.exp(-xv))))}")
    c.add(f'<polyline points="{" ".join(curve)}" fill="none" stroke="#444444" stroke-width="1.5"/>')
    c.line(sx(0), HEIGHT - MARGIN, sx(0), MARGIN, "#bbbbbb", "2 4")
    for p in sorted(points, key=lambda p: p.field_id):
        x, y = sx(p.x_norm), sy(p.y)
        c.add(f'<g class="field" data-field={quoteattr(p.field_id)}>')
        c.add(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="4" fill="#1f77b4"/>')
        c.text(x + 6, y + 12, names.get(p.field_id, p.field_id))
        c.add("</g>")
    return c.render()
