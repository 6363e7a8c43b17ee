"""Minimal deterministic SVG scatter plots with curve overlays."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .report import fmt_float

WIDTH = 640
HEIGHT = 640
MARGIN = 40
CURVE_SAMPLES = 720


class Frame:
    """Affine map from data coordinates [-xr, xr] x [-yr, yr] to pixels."""

    def __init__(self, xr: float, yr: float):
        self.xr = xr
        self.yr = yr

    def px(self, x: float, y: float) -> tuple[str, str]:
        sx = MARGIN + (x + self.xr) / (2 * self.xr) * (WIDTH - 2 * MARGIN)
        sy = HEIGHT - MARGIN - (y + self.yr) / (2 * self.yr) * (HEIGHT - 2 * MARGIN)
        return fmt_float(round(sx, 6)), fmt_float(round(sy, 6))

    def inside(self, x: float, y: float, slack: float = 1.05) -> bool:
        return abs(x) <= self.xr * slack and abs(y) <= self.yr * slack


def ellipse_samples(M: np.ndarray, scale: float) -> list:
    th = np.linspace(0, 2 * math.pi, CURVE_SAMPLES + 1)
    b = np.stack([np.cos(th), np.sin(th)], axis=1)
    return [scale * (b @ M)]


def hyperbola_samples(M: np.ndarray, scale: float, sign: int, span: float = 8.0) -> list:
    """Both branches of {scale * (x1, x2) M : x1 x2 = sign}."""
    t = np.linspace(-span, span, CURVE_SAMPLES)
    out = []
    for sx in (1, -1):
        b = np.stack([sx * np.exp(t), sign * sx * np.exp(-t)], axis=1)
        out.append(scale * (b @ M))
    return out


def _polyline_segments(frame: Frame, pts: np.ndarray) -> list:
    """Split a sampled curve into runs that stay near the frame."""
    runs, cur = [], []
    for x, y in pts:
        if frame.inside(x, y):
            cur.append(frame.px(x, y))
        elif cur:
            runs.append(cur)
            cur = []
    if cur:
        runs.append(cur)
    return [r for r in runs if len(r) > 1]


def render(points: Sequence[Sequence[float]], extent: float, curves: Sequence[np.ndarray] = (),
           title: str = "", point_radius: float = 1.2) -> str:
    """SVG text for a scatter of 2D points and optional sampled curves.

    Points are drawn in sorted order so the output does not depend on the
    order they were computed in.
    """
    frame = Frame(extent, extent)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        esc = title.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        lines.append(f'<text x="{MARGIN}" y="{MARGIN // 2 + 4}" font-family="sans-serif" '
                     f'font-size="13">{esc}</text>')
    x0, y0 = frame.px(-extent, 0)
    x1, y1 = frame.px(extent, 0)
    lines.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" stroke="#999" stroke-width="0.5"/>')
    x0, y0 = frame.px(0, -extent)
    x1, y1 = frame.px(0, extent)
    lines.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" stroke="#999" stroke-width="0.5"/>')
    lines.append('<g fill="none" stroke="#c33" stroke-width="0.6">')
    for c in curves:
        for run in _polyline_segments(frame, np.asarray(c)):
            lines.append('<polyline points="' + " ".join(f"{a},{b}" for a, b in run) + '"/>')
    lines.append("</g>")
    lines.append('<g fill="#124">')
    r = fmt_float(point_radius)
    for x, y in sorted((float(p[0]), float(p[1])) for p in points):
        if frame.inside(x, y, 1.0):
            cx, cy = frame.px(x, y)
            lines.append(f'<circle cx="{cx}" cy="{cy}" r="{r}"/>')
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
