"""Minimal SVG biplot: two score columns plus loading rays from the origin."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

SIZE = 480
MARGIN = 60


def biplot_svg(x, y, rays, labels, xlabel, ylabel, converged=None):
    """Scatter ``(x, y)`` with line segments from the origin to each ray.

    Rays are rescaled to 80% of the score range so both layers share one
    coordinate frame. Returns the SVG document as text.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rays = np.asarray(rays, dtype=float).reshape(-1, 2)
    if converged is not None:
        keep = np.asarray(converged, dtype=bool)
        x, y = x[keep], y[keep]
    extent = max(np.abs(x).max(initial=0), np.abs(y).max(initial=0), 1e-12)
    ray_len = np.abs(rays).max(initial=0)
    rays = rays * (0.8 * extent / ray_len) if ray_len > 0 else rays
    half = (SIZE - 2 * MARGIN) / 2

    def px(a):
        return SIZE / 2 + a / extent * half

    def py(b):
        return SIZE / 2 - b / extent * half

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>',
        f'<line x1="{MARGIN}" y1="{SIZE / 2}" x2="{SIZE - MARGIN}" y2="{SIZE / 2}" stroke="#bbb"/>',
        f'<line x1="{SIZE / 2}" y1="{MARGIN}" x2="{SIZE / 2}" y2="{SIZE - MARGIN}" stroke="#bbb"/>',
    ]
    for a, b in zip(x, y):
        out.append(f'<circle cx="{px(a):.3f}" cy="{py(b):.3f}" r="3" fill="#1f77b4" fill-opacity="0.7"/>')
    for (a, b), lab in zip(rays, labels):
        out.append(
            f'<line x1="{SIZE / 2}" y1="{SIZE / 2}" x2="{px(a):.3f}" y2="{py(b):.3f}" stroke="#d62728" stroke-dasharray="4 3"/>'
        )
        out.append(f'<text x="{px(a):.3f}" y="{py(b):.3f}" font-size="11" fill="#d62728">{escape(str(lab))}</text>')
    out.append(f'<text x="{SIZE / 2}" y="{SIZE - 15}" font-size="13" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="15" y="{SIZE / 2}" font-size="13" text-anchor="middle" transform="rotate(-90 15 {SIZE / 2})">{escape(ylabel)}</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
