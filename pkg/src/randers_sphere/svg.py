"""Minimal deterministic SVG line/point plots.

Coordinates are written with a fixed number of decimals and no timestamps, so
identical input produces byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")

DEFAULT_STYLE = {
    "width": 640,
    "height": 480,
    "margin": 48,
    "stroke_width": 1.2,
    "point_radius": 1.8,
    "font_size": 12,
    "background": "#ffffff",
    "axis_color": "#444444",
    "title": "",
}


@dataclass(frozen=True)
class Curve:
    """Polyline or point set.  For the azimuthal projection ``x`` is theta and ``y`` is r."""

    x: np.ndarray
    y: np.ndarray
    label: str = ""
    points: bool = False
    color: str | None = None


def _finite_segments(x, y):
    ok = np.isfinite(x) & np.isfinite(y)
    segs, cur = [], []
    for xi, yi, good in zip(x, y, ok):
        if good:
            cur.append((xi, yi))
        elif cur:
            segs.append(cur)
            cur = []
    if cur:
        segs.append(cur)
    return segs


def _project(curve: Curve, projection: str):
    x = np.asarray(curve.x, float)
    y = np.asarray(curve.y, float)
    if projection == "azimuthal":
        return y * np.cos(x), y * np.sin(x)
    if projection == "chart":
        return x, y
    raise DomainError(f"unknown projection {projection!r}")


def _fmt(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def render_svg(curves, styling: dict | None = None, projection: str = "chart",
               axis_labels: tuple[str, str] = ("theta", "r")) -> str:
    if not curves:
        raise DomainError("nothing to plot")
    st = dict(DEFAULT_STYLE, **(styling or {}))
    W, H, M = st["width"], st["height"], st["margin"]
    proj = [_project(c, projection) for c in curves]
    xs = np.concatenate([p[0][np.isfinite(p[0])] for p in proj] or [np.zeros(1)])
    ys = np.concatenate([p[1][np.isfinite(p[1])] for p in proj] or [np.zeros(1)])
    if xs.size == 0:
        xs = ys = np.zeros(1)
    x0, x1, y0, y1 = float(xs.min()), float(xs.max()), float(ys.min()), float(ys.max())
    if projection == "azimuthal":
        lim = max(abs(x0), abs(x1), abs(y0), abs(y1), 1e-9)
        x0, x1, y0, y1 = -lim, lim, -lim, lim
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def sx(v):
        return M + (v - x0) / (x1 - x0) * (W - 2 * M)

    def sy(v):
        return H - M - (v - y0) / (y1 - y0) * (H - 2 * M)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="{st["background"]}"/>']
    ac, fs = st["axis_color"], st["font_size"]
    if projection == "chart":
        out.append(f'<rect x="{M}" y="{M}" width="{W - 2 * M}" height="{H - 2 * M}" '
                   f'fill="none" stroke="{ac}" stroke-width="1"/>')
        out.append(f'<text x="{W / 2:.1f}" y="{H - M / 4:.1f}" font-size="{fs}" '
                   f'text-anchor="middle">{axis_labels[0]} [{_fmt(x0)}, {_fmt(x1)}]</text>')
        out.append(f'<text x="{M / 4:.1f}" y="{H / 2:.1f}" font-size="{fs}" '
                   f'transform="rotate(-90 {M / 4:.1f} {H / 2:.1f})" text-anchor="middle">'
                   f'{axis_labels[1]} [{_fmt(y0)}, {_fmt(y1)}]</text>')
    else:
        cx, cy = sx(0.0), sy(0.0)
        for frac in (0.25, 0.5, 0.75, 1.0):
            rad = frac * (sx(x1) - cx)
            out.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(rad)}" fill="none" '
                       f'stroke="{ac}" stroke-width="0.5"/>')
        out.append(f'<text x="{M}" y="{H - M / 4:.1f}" font-size="{fs}">azimuthal, '
                   f'r &lt;= {_fmt(x1)}</text>')
    if st["title"]:
        out.append(f'<text x="{W / 2:.1f}" y="{M / 2:.1f}" font-size="{fs + 2}" '
                   f'text-anchor="middle">{st["title"]}</text>')

    for i, (c, (px, py)) in enumerate(zip(curves, proj)):
        color = c.color or PALETTE[i % len(PALETTE)]
        if c.points:
            for a, b in zip(px, py):
                if math.isfinite(a) and math.isfinite(b):
                    out.append(f'<circle cx="{_fmt(sx(a))}" cy="{_fmt(sy(b))}" '
                               f'r="{st["point_radius"]}" fill="{color}"/>')
        else:
            for seg in _finite_segments(px, py):
                pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in seg)
                out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                           f'stroke-width="{st["stroke_width"]}"/>')
        if c.label:
            out.append(f'<text x="{W - M + 4}" y="{M + 14 * (i + 1)}" font-size="{fs - 2}" '
                       f'fill="{color}">{c.label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(curves, path, styling: dict | None = None, projection: str = "chart",
             axis_labels: tuple[str, str] = ("theta", "r")) -> Path:
    """Write ``curves`` to ``path`` as a standalone SVG and return the path."""
    path = Path(path)
    path.write_text(render_svg(curves, styling, projection, axis_labels), encoding="utf-8")
    return path
