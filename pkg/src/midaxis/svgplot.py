"""Minimal SVG line plots.

CSV is the authoritative output; these figures exist only for quick
human inspection, so this is a bare polyline emitter with fixed colors
and no external plotting dependency.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

_COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]

_W, _H = 860, 520
_ML, _MR, _MT, _MB = 70, 20, 30, 50  # margins


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** np.floor(np.log10(raw))
    step = min(s for s in (1.0, 2.0, 2.5, 5.0, 10.0) if s * mag >= raw) * mag
    first = np.ceil(lo / step) * step
    return np.arange(first, hi + 0.5 * step, step)


def write_svg(path, x, series: dict, title: str = "", xlabel: str = "", ylabel: str = ""):
    """Write a line plot of each named series against x."""
    path = Path(path)
    x = np.asarray(x, dtype=float)
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    xlo, xhi = float(x.min()), float(x.max())
    ylo = min(float(v.min()) for v in ys.values())
    yhi = max(float(v.max()) for v in ys.values())
    if yhi == ylo:
        ylo, yhi = ylo - 1.0, yhi + 1.0
    pad = 0.05 * (yhi - ylo)
    ylo, yhi = ylo - pad, yhi + pad
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def px(v):
        return _ML + (v - xlo) / (xhi - xlo) * pw

    def py(v):
        return _MT + (yhi - v) / (yhi - ylo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
    ]
    for tx in _ticks(xlo, xhi):
        X = px(tx)
        parts.append(f'<line x1="{X:.1f}" y1="{_MT + ph}" x2="{X:.1f}" y2="{_MT + ph + 5}" stroke="#333"/>')
        parts.append(
            f'<text x="{X:.1f}" y="{_MT + ph + 18}" text-anchor="middle">{tx:.4g}</text>'
        )
    for ty in _ticks(ylo, yhi):
        Y = py(ty)
        parts.append(f'<line x1="{_ML - 5}" y1="{Y:.1f}" x2="{_ML}" y2="{Y:.1f}" stroke="#333"/>')
        parts.append(
            f'<text x="{_ML - 8}" y="{Y + 4:.1f}" text-anchor="end">{ty:.4g}</text>'
        )
        parts.append(
            f'<line x1="{_ML}" y1="{Y:.1f}" x2="{_ML + pw}" y2="{Y:.1f}" '
            'stroke="#ddd" stroke-width="0.5"/>'
        )
    for i, (name, y) in enumerate(ys.items()):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.2"/>'
        )
        parts.append(
            f'<text x="{_ML + pw - 10}" y="{_MT + 16 + 16 * i}" text-anchor="end" '
            f'fill="{color}">{name}</text>'
        )
    if title:
        parts.append(f'<text x="{_W / 2}" y="{_MT - 10}" text-anchor="middle" font-size="14">{title}</text>')
    if xlabel:
        parts.append(f'<text x="{_ML + pw / 2}" y="{_H - 12}" text-anchor="middle">{xlabel}</text>')
    if ylabel:
        parts.append(
            f'<text x="18" y="{_MT + ph / 2}" text-anchor="middle" '
            f'transform="rotate(-90 18 {_MT + ph / 2})">{ylabel}</text>'
        )
    parts.append("</svg>")
    path.write_text("\n".join(parts))
    return path
