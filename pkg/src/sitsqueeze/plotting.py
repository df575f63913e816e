"""Minimal static SVG line plots with optional error bands."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


@dataclass
class Line:
    label: str
    x: np.ndarray
    y: np.ndarray
    err: np.ndarray | None = None


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=mag * 10)
    return np.arange(math.ceil(lo / step) * step, hi + 0.5 * step, step)


def _finite_range(values: list[np.ndarray]) -> tuple[float, float]:
    v = np.concatenate([np.asarray(a, float).ravel() for a in values]) if values else np.zeros(1)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return 0.0, 1.0
    lo, hi = float(v.min()), float(v.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def line_plot(lines: list[Line], xlabel: str, ylabel: str, title: str = "", width: int = 640, height: int = 420) -> str:
    """Render lines (with shaded +-err bands) to an SVG document."""
    ml, mr, mt, mb = 70, 150, 36, 52
    pw, ph = width - ml - mr, height - mt - mb
    x0, x1 = _finite_range([ln.x for ln in lines])
    ys = [ln.y for ln in lines] + [ln.y + ln.err for ln in lines if ln.err is not None]
    ys += [ln.y - ln.err for ln in lines if ln.err is not None]
    y0, y1 = _finite_range(ys)

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return mt + (y1 - y) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        if x0 <= t <= x1:
            out.append(f'<line x1="{sx(t):.1f}" y1="{mt + ph}" x2="{sx(t):.1f}" y2="{mt + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{sx(t):.1f}" y="{mt + ph + 18}" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        if y0 <= t <= y1:
            out.append(f'<line x1="{ml - 5}" y1="{sy(t):.1f}" x2="{ml}" y2="{sy(t):.1f}" stroke="black"/>')
            out.append(f'<text x="{ml - 8}" y="{sy(t) + 4:.1f}" text-anchor="end">{t:.4g}</text>')
    for i, ln in enumerate(lines):
        col = PALETTE[i % len(PALETTE)]
        x, y = np.asarray(ln.x, float), np.asarray(ln.y, float)
        ok = np.isfinite(x) & np.isfinite(y)
        if ln.err is not None:
            e = np.asarray(ln.err, float)
            okb = ok & np.isfinite(e)
            if okb.sum() > 1:
                up = [f"{sx(a):.1f},{sy(b):.1f}" for a, b in zip(x[okb], y[okb] + e[okb])]
                dn = [f"{sx(a):.1f},{sy(b):.1f}" for a, b in zip(x[okb][::-1], (y[okb] - e[okb])[::-1])]
                out.append(f'<polygon points="{" ".join(up + dn)}" fill="{col}" fill-opacity="0.2" stroke="none"/>')
        pts = " ".join(f"{sx(a):.1f},{sy(b):.1f}" for a, b in zip(x[ok], y[ok]))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.8"/>')
        if ok.sum() == 1:
            out.append(f'<circle cx="{sx(x[ok][0]):.1f}" cy="{sy(y[ok][0]):.1f}" r="3" fill="{col}"/>')
        ly = mt + 14 + 18 * i
        out.append(f'<line x1="{ml + pw + 12}" y1="{ly - 4}" x2="{ml + pw + 32}" y2="{ly - 4}" stroke="{col}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw + 38}" y="{ly}">{escape(ln.label)}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{mt + ph / 2}" text-anchor="middle" transform="rotate(-90 16 {mt + ph / 2})">{escape(ylabel)}</text>'
    )
    if title:
        out.append(f'<text x="{ml + pw / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save_plot(path: str | Path, lines: list[Line], xlabel: str, ylabel: str, title: str = "") -> Path:
    path = Path(path)
    path.write_text(line_plot(lines, xlabel, ylabel, title))
    return path
