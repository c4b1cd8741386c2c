"""Plain-text SVG overlay of raw points, fused polylines and ground truth."""

from __future__ import annotations

import math
from typing import Mapping, Optional
from xml.sax.saxutils import escape

import numpy as np

from .geometry import Polyline, as_points

PALETTE = {"MDA": "#d62728", "ARA": "#1f77b4", "DPA": "#2ca02c"}
_FALLBACK = ("#9467bd", "#8c564b", "#e377c2", "#17becf")


def _nice_step(span: float, target: int = 6) -> float:
    raw = span / max(target, 1)
    mag = 10 ** math.floor(math.log10(raw)) if raw > 0 else 1.0
    for m in (1, 2, 5, 10):
        if raw <= m * mag:
            return m * mag
    return 10 * mag


class _Frame:
    """Maps meters to SVG pixels with equal scale on both axes (y up)."""

    def __init__(self, lo, hi, width, height, margin):
        span = np.maximum(hi - lo, 1e-9)
        self.scale = min((width - 2 * margin) / span[0], (height - 2 * margin) / span[1])
        used = span * self.scale
        self.ox = margin + (width - 2 * margin - used[0]) / 2 - lo[0] * self.scale
        self.oy = height - margin - (height - 2 * margin - used[1]) / 2 + lo[1] * self.scale

    def xy(self, x, y):
        return self.ox + x * self.scale, self.oy - y * self.scale


def _path_d(frame: _Frame, pts) -> str:
    parts = []
    for k, (x, y) in enumerate(pts):
        u, v = frame.xy(x, y)
        parts.append(f"{'M' if k == 0 else 'L'}{u:.2f},{v:.2f}")
    return " ".join(parts)


def render_svg(
    points,
    polylines: Mapping[str, Polyline],
    truth: Optional[Polyline] = None,
    width: int = 900,
    height: int = 700,
    title: str = "",
) -> str:
    """SVG document with one ``<g class="layer">`` per layer, each holding a single ``<path>``.

    Raw points are grey dots, each polyline gets its own stroke colour and the
    ground truth is dashed. Axes are labelled in meters.
    """
    P = as_points(points)
    clouds = [P] + [pl.vertices for pl in polylines.values()]
    if truth is not None:
        clouds.append(truth.vertices)
    allp = np.vstack([c for c in clouds if len(c)])
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    pad = 0.03 * np.maximum(hi - lo, 1.0)
    lo, hi = lo - pad, hi + pad
    margin = 60
    fr = _Frame(lo, hi, width, height, margin)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="16">{escape(title)}</text>')

    # axes
    out.append('<g id="axes" stroke="#444" stroke-width="1" font-family="sans-serif" font-size="11">')
    x0, y0 = fr.xy(lo[0], lo[1])
    x1, y1 = fr.xy(hi[0], hi[1])
    out.append(f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y0:.2f}"/>')
    out.append(f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x0:.2f}" y2="{y1:.2f}"/>')
    for axis in (0, 1):
        step = _nice_step(hi[axis] - lo[axis])
        tick = math.ceil(lo[axis] / step) * step
        while tick <= hi[axis]:
            if axis == 0:
                u, _ = fr.xy(tick, lo[1])
                out.append(f'<line x1="{u:.2f}" y1="{y0:.2f}" x2="{u:.2f}" y2="{y0 + 5:.2f}"/>')
                out.append(f'<text x="{u:.2f}" y="{y0 + 18:.2f}" text-anchor="middle" '
                           f'stroke="none" fill="#444">{tick:g}</text>')
            else:
                _, v = fr.xy(lo[0], tick)
                out.append(f'<line x1="{x0 - 5:.2f}" y1="{v:.2f}" x2="{x0:.2f}" y2="{v:.2f}"/>')
                out.append(f'<text x="{x0 - 8:.2f}" y="{v + 4:.2f}" text-anchor="end" '
                           f'stroke="none" fill="#444">{tick:g}</text>')
            tick += step
    out.append(f'<text x="{(x0 + x1) / 2:.2f}" y="{height - 12}" text-anchor="middle" '
               'stroke="none" fill="#444">x [m]</text>')
    out.append(f'<text x="14" y="{(y0 + y1) / 2:.2f}" text-anchor="middle" stroke="none" '
               f'fill="#444" transform="rotate(-90 14 {(y0 + y1) / 2:.2f})">y [m]</text>')
    out.append("</g>")

    legend = [("raw points", "#9a9a9a", "")]
    dots = " ".join(f"M{u:.2f},{v:.2f}h0" for u, v in (fr.xy(x, y) for x, y in P))
    out.append('<g id="layer-raw" class="layer">')
    out.append(f'<path d="{dots}" fill="none" stroke="#9a9a9a" stroke-width="3" '
               'stroke-linecap="round"/>')
    out.append("</g>")
    if truth is not None:
        legend.append(("ground truth", "#000000", "6,4"))
        out.append('<g id="layer-truth" class="layer">')
        out.append(f'<path d="{_path_d(fr, truth.vertices)}" fill="none" stroke="#000000" '
                   'stroke-width="1.2" stroke-dasharray="6,4"/>')
        out.append("</g>")
    for k, (name, line) in enumerate(polylines.items()):
        color = PALETTE.get(name.upper(), _FALLBACK[k % len(_FALLBACK)])
        legend.append((name, color, ""))
        out.append(f'<g id="layer-{escape(name)}" class="layer">')
        out.append(f'<path d="{_path_d(fr, line.vertices)}" fill="none" stroke="{color}" '
                   'stroke-width="1.6" stroke-linejoin="round"/>')
        out.append("</g>")

    out.append('<g id="legend" font-family="sans-serif" font-size="12">')
    lx, ly = width - margin - 130, margin
    for k, (label, color, dash) in enumerate(legend):
        y = ly + 18 * k
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<line x1="{lx:.1f}" y1="{y:.1f}" x2="{lx + 24:.1f}" y2="{y:.1f}" '
                   f'stroke="{color}" stroke-width="3"{dash_attr}/>')
        out.append(f'<text x="{lx + 30:.1f}" y="{y + 4:.1f}">{escape(label)}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
