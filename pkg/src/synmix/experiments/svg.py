"""Minimal native SVG line plots."""

from __future__ import annotations

from html import escape

import numpy as np

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#7f7f7f")


def _ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, count)


def line_plot_panel(series, x0, y0, width, height, title="", xlabel="", logx=False, logy=False) -> str:
    """One panel of polylines; ``series`` is a list of ``(label, x, y)``."""
    parts = []
    xs = [np.asarray(x, dtype=float) for _, x, _ in series]
    ys = [np.asarray(y, dtype=float) for _, _, y in series]
    tx = (lambda v: np.log10(v)) if logx else (lambda v: v)
    ty = (lambda v: np.log10(np.maximum(v, 1e-300))) if logy else (lambda v: v)
    all_x = np.concatenate([tx(x) for x in xs])
    all_y = np.concatenate([ty(y) for y in ys])
    xmin, xmax = float(all_x.min()), float(all_x.max())
    ymin, ymax = (float(all_y.min()), float(all_y.max())) if logy else (0.0 if all_y.min() >= 0 else float(all_y.min()), float(all_y.max()))
    if xmax == xmin:
        xmax = xmin + 1
    if ymax == ymin:
        ymax = ymin + 1
    left, right, top, bottom = 50, 10, 25, 35
    pw, ph = width - left - right, height - top - bottom

    def px(v):
        return x0 + left + (v - xmin) / (xmax - xmin) * pw

    def py(v):
        return y0 + top + ph - (v - ymin) / (ymax - ymin) * ph

    parts.append(f'<rect x="{x0 + left}" y="{y0 + top}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>')
    if title:
        parts.append(f'<text x="{x0 + left + pw / 2:.1f}" y="{y0 + 16}" text-anchor="middle" font-size="12">{escape(title)}</text>')
    for t in _ticks(xmin, xmax):
        label = f"{10**t:.3g}" if logx else f"{t:.3g}"
        parts.append(f'<text x="{px(t):.1f}" y="{y0 + top + ph + 14}" text-anchor="middle" font-size="9">{label}</text>')
    for t in _ticks(ymin, ymax):
        label = f"{10**t:.3g}" if logy else f"{t:.3g}"
        parts.append(f'<text x="{x0 + left - 4}" y="{py(t) + 3:.1f}" text-anchor="end" font-size="9">{label}</text>')
    if xlabel:
        parts.append(f'<text x="{x0 + left + pw / 2:.1f}" y="{y0 + height - 4}" text-anchor="middle" font-size="10">{escape(xlabel)}</text>')
    for i, ((label, _, _), x, y) in enumerate(zip(series, xs, ys)):
        color = PALETTE[i % len(PALETTE)]
        step = max(1, x.size // 800)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(tx(x)[::step], ty(y)[::step]))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = y0 + top + 12 + 13 * i
        parts.append(f'<line x1="{x0 + left + pw - 110}" y1="{ly - 4}" x2="{x0 + left + pw - 95}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{x0 + left + pw - 91}" y="{ly}" font-size="9">{escape(label)}</text>')
    return "\n".join(parts)


def figure(panels, ncols: int = 1, panel_width: int = 420, panel_height: int = 300) -> str:
    """Grid of panels; each panel is a dict of ``line_plot_panel`` keyword arguments."""
    nrows = -(-len(panels) // ncols)
    w, h = ncols * panel_width, nrows * panel_height
    body = []
    for i, panel in enumerate(panels):
        r, c = divmod(i, ncols)
        body.append(line_plot_panel(x0=c * panel_width, y0=r * panel_height, width=panel_width, height=panel_height, **panel))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">\n'
        f'<rect width="{w}" height="{h}" fill="white"/>\n' + "\n".join(body) + "\n</svg>\n"
    )
