"""Minimal text SVG writer: one rate-vs-depth polyline per (cover, mode)."""

from __future__ import annotations

import math
from typing import Sequence

# Distinguishable fills for up to a dozen series; cycled beyond that.
_PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
)

_WIDTH, _HEIGHT = 720, 440
_MARGIN = 60


def _scale(value, lo, hi, out_lo, out_hi):
    if hi <= lo:
        return (out_lo + out_hi) / 2.0
    return out_lo + (value - lo) / (hi - lo) * (out_hi - out_lo)


def rate_plot_svg(rows: Sequence, title: str) -> str:
    """Render ResultRow-like records (cover, mode, n, rate) as an SVG plot."""
    series: dict[tuple[str, str], list[tuple[int, float]]] = {}
    for row in rows:
        if not math.isfinite(row.rate):
            continue
        series.setdefault((row.cover, row.mode), []).append((min(row.n), row.rate))
    for pts in series.values():
        pts.sort()
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    if not xs:
        return "<svg xmlns='http://www.w3.org/2000/svg'/>\n"
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    pad = 0.05 * (y_hi - y_lo or 1.0)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def px(x):
        return _scale(x, x_lo, x_hi, _MARGIN, _WIDTH - _MARGIN)

    def py(y):
        return _scale(y, y_lo, y_hi, _HEIGHT - _MARGIN, _MARGIN)

    out = [
        f"<svg xmlns='http://www.w3.org/2000/svg' width='{_WIDTH}' height='{_HEIGHT}' "
        f"viewBox='0 0 {_WIDTH} {_HEIGHT}'>",
        f"<rect width='{_WIDTH}' height='{_HEIGHT}' fill='white'/>",
        f"<text x='{_WIDTH // 2}' y='24' text-anchor='middle' font-size='16'>{title}</text>",
        f"<line x1='{_MARGIN}' y1='{_HEIGHT - _MARGIN}' x2='{_WIDTH - _MARGIN}' "
        f"y2='{_HEIGHT - _MARGIN}' stroke='black'/>",
        f"<line x1='{_MARGIN}' y1='{_MARGIN}' x2='{_MARGIN}' y2='{_HEIGHT - _MARGIN}' "
        f"stroke='black'/>",
        f"<text x='{_WIDTH // 2}' y='{_HEIGHT - 16}' text-anchor='middle' "
        f"font-size='12'>min(n)</text>",
        f"<text x='16' y='{_HEIGHT // 2}' font-size='12' "
        f"transform='rotate(-90 16 {_HEIGHT // 2})'>rate</text>",
        f"<text x='{_MARGIN - 6}' y='{py(y_lo) + 4:.1f}' text-anchor='end' "
        f"font-size='10'>{y_lo:.3f}</text>",
        f"<text x='{_MARGIN - 6}' y='{py(y_hi) + 4:.1f}' text-anchor='end' "
        f"font-size='10'>{y_hi:.3f}</text>",
    ]
    for i, ((cover, mode), pts) in enumerate(sorted(series.items())):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in pts)
        out.append(
            f"<polyline points='{coords}' fill='none' stroke='{color}' stroke-width='1.5'/>"
        )
        out.append(
            f"<text x='{_WIDTH - _MARGIN + 4}' y='{_MARGIN + 14 * i}' font-size='10' "
            f"fill='{color}'>{cover}/{mode}</text>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
