"""Minimal deterministic SVG line plots (no plotting library required).

Each figure is a grid of panels. A panel has fixed axis ranges, axis labels
and any number of polyline series; output depends only on the inputs, so
repeated runs produce identical files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")

PANEL_W, PANEL_H = 420, 300
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 30, 45


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str
    color: str | None = None
    dashed: bool = False


@dataclass
class Panel:
    title: str
    xlabel: str
    ylabel: str
    xlim: tuple
    ylim: tuple
    series: list = field(default_factory=list)

    def add(self, x, y, label, color=None, dashed=False) -> Panel:
        self.series.append(Series(np.asarray(x, float), np.asarray(y, float), label, color, dashed))
        return self


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    span = hi - lo
    raw = span / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=raw)
    start = np.ceil(lo / step - 1e-9) * step
    return np.arange(start, hi + 1e-9 * span, step)


def _f(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _panel_svg(p: Panel, ox: float, oy: float) -> list[str]:
    w = PANEL_W - MARGIN_L - MARGIN_R
    h = PANEL_H - MARGIN_T - MARGIN_B
    x0, y0 = ox + MARGIN_L, oy + MARGIN_T
    (xa, xb), (ya, yb) = p.xlim, p.ylim

    def sx(x):
        return x0 + (np.asarray(x) - xa) / (xb - xa) * w

    def sy(y):
        return y0 + h - (np.asarray(y) - ya) / (yb - ya) * h

    out = [
        f'<rect x="{_f(x0)}" y="{_f(y0)}" width="{w}" height="{h}" fill="none" stroke="#000"/>',
        f'<text x="{_f(x0 + w / 2)}" y="{_f(oy + 18)}" text-anchor="middle" font-size="13">{escape(p.title)}</text>',
        f'<text x="{_f(x0 + w / 2)}" y="{_f(y0 + h + 36)}" text-anchor="middle" font-size="11">{escape(p.xlabel)}</text>',
        f'<text x="{_f(ox + 14)}" y="{_f(y0 + h / 2)}" text-anchor="middle" font-size="11" '
        f'transform="rotate(-90 {_f(ox + 14)} {_f(y0 + h / 2)})">{escape(p.ylabel)}</text>',
    ]
    for t in _ticks(xa, xb):
        px = _f(float(sx(t)))
        out.append(f'<line x1="{px}" y1="{_f(y0 + h)}" x2="{px}" y2="{_f(y0 + h + 4)}" stroke="#000"/>')
        out.append(f'<text x="{px}" y="{_f(y0 + h + 16)}" text-anchor="middle" font-size="10">{t:g}</text>')
    for t in _ticks(ya, yb):
        py = _f(float(sy(t)))
        out.append(f'<line x1="{_f(x0 - 4)}" y1="{py}" x2="{_f(x0)}" y2="{py}" stroke="#000"/>')
        out.append(f'<text x="{_f(x0 - 6)}" y="{py}" text-anchor="end" dominant-baseline="middle" font-size="10">{t:g}</text>')
    out.append(f'<clipPath id="c{int(ox)}_{int(oy)}"><rect x="{_f(x0)}" y="{_f(y0)}" width="{w}" height="{h}"/></clipPath>')
    for k, s in enumerate(p.series):
        color = s.color or PALETTE[k % len(PALETTE)]
        ok = np.isfinite(s.x) & np.isfinite(s.y)
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in zip(sx(s.x[ok]), sy(s.y[ok])))
        dash = ' stroke-dasharray="5,3"' if s.dashed else ""
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.2"{dash} '
                   f'clip-path="url(#c{int(ox)}_{int(oy)})"><title>{escape(s.label)}</title></polyline>')
        ly = y0 + 12 + 13 * k
        out.append(f'<line x1="{_f(x0 + w - 80)}" y1="{_f(ly)}" x2="{_f(x0 + w - 62)}" y2="{_f(ly)}" stroke="{color}"{dash}/>')
        out.append(f'<text x="{_f(x0 + w - 58)}" y="{_f(ly)}" dominant-baseline="middle" font-size="10">{escape(s.label)}</text>')
    return out


def render(panels: list[Panel], columns: int = 2) -> str:
    columns = max(1, min(columns, len(panels)))
    rows = -(-len(panels) // columns)
    width, height = columns * PANEL_W, rows * PANEL_H
    body = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<rect width="{width}" height="{height}" fill="#fff"/>',
    ]
    for i, p in enumerate(panels):
        body += _panel_svg(p, (i % columns) * PANEL_W, (i // columns) * PANEL_H)
    body.append("</svg>")
    return "\n".join(body) + "\n"


def count_curves(svg_text: str) -> int:
    return svg_text.count("<polyline")
