"""Static SVG snapshots: multirectangle layouts and convergence traces."""

from __future__ import annotations

import math
from typing import Sequence

from .sets import Multirectangle

W, H, PAD = 480, 360, 32


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{PAD}" y="{PAD // 2 + 4}" font-family="monospace" font-size="12">{_escape(title)}</text>',
    ]


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def multirectangle_svg(rects: Multirectangle, title: str = "") -> str:
    """Rectangles of a 1D or 2D multirectangle drawn to fit the canvas."""
    comps = [r for r in rects.components if r.bounded]
    out = _header(title)
    if comps:
        d = comps[0].dim
        if d > 2:
            raise ValueError("only 1D and 2D layouts can be drawn")
        xs = [float(v) for r in comps for v in (r.sides[0].lo, r.sides[0].hi)]
        x0, x1 = min(xs), max(xs)
        if d == 2:
            ys = [float(v) for r in comps for v in (r.sides[1].lo, r.sides[1].hi)]
            y0, y1 = min(ys), max(ys)
        else:
            y0, y1 = 0.0, 1.0
        sx = (W - 2 * PAD) / ((x1 - x0) or 1.0)
        sy = (H - 2 * PAD) / ((y1 - y0) or 1.0)
        s = min(sx, sy) if d == 2 else sx
        for r in comps:
            a, b = float(r.sides[0].lo), float(r.sides[0].hi)
            if d == 2:
                c, e = float(r.sides[1].lo), float(r.sides[1].hi)
            else:
                c, e = 0.4, 0.6
            x = PAD + (a - x0) * s
            y = H - PAD - (e - y0) * (s if d == 2 else sy)
            w = (b - a) * s
            h = (e - c) * (s if d == 2 else sy)
            out.append(f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" height="{_fmt(h)}" '
                       'fill="steelblue" fill-opacity="0.5" stroke="black" stroke-width="0.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def trace_svg(xs: Sequence[float], ys: Sequence[float], title: str = "", log_x: bool = True) -> str:
    """Polyline of ``ys`` against ``xs`` (log2 scale on x by default)."""
    pts = [(math.log2(x) if log_x and x > 0 else float(x), float(y))
           for x, y in zip(xs, ys) if math.isfinite(float(y))]
    out = _header(title)
    if pts:
        px = [p[0] for p in pts]
        py = [p[1] for p in pts]
        x0, x1, y0, y1 = min(px), max(px), min(py), max(py)
        sx = (W - 2 * PAD) / ((x1 - x0) or 1.0)
        sy = (H - 2 * PAD) / ((y1 - y0) or 1.0)
        coords = " ".join(f"{_fmt(PAD + (x - x0) * sx)},{_fmt(H - PAD - (y - y0) * sy)}" for x, y in pts)
        out.append(f'<polyline points="{coords}" fill="none" stroke="firebrick" stroke-width="1.5"/>')
        out.append(f'<text x="{PAD}" y="{H - 8}" font-family="monospace" font-size="10">'
                   f'y in [{y0:.6g}, {y1:.6g}]</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
