"""Minimal static SVG line charts.

Output depends only on the numbers passed in, printed with fixed
precision, so a chart regenerated from its CSV is byte-identical.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#000000", "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")
WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=150, top=40, bottom=55)


def _ticks(lo, hi, count=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** np.floor(np.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return [float(v) for v in np.arange(start, hi + 0.5 * step, step)]


def line_chart(x, series, *, title="", xlabel="", ylabel="", markers=False):
    """``series`` is a list of ``(label, y)``; ``y`` may contain nan gaps."""
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(y, dtype=float) for _, y in series]
    finite = np.concatenate([y[np.isfinite(y)] for y in ys]) if ys else np.array([0.0])
    y_lo = min(0.0, float(finite.min())) if finite.size else 0.0
    y_hi = float(finite.max()) if finite.size else 1.0
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    y_hi += 0.05 * (y_hi - y_lo)
    x_lo, x_hi = float(x.min()), float(x.max())
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return MARGIN["left"] + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return MARGIN["top"] + ph - (v - y_lo) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        f'fill="none" stroke="#444444"/>',
    ]
    for t in _ticks(x_lo, x_hi):
        out.append(f'<line x1="{sx(t):.2f}" y1="{MARGIN["top"] + ph}" x2="{sx(t):.2f}" '
                   f'y2="{MARGIN["top"] + ph + 5}" stroke="#444444"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{MARGIN["top"] + ph + 18}" '
                   f'text-anchor="middle">{t:g}</text>')
    for t in _ticks(y_lo, y_hi):
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{sy(t):.2f}" x2="{MARGIN["left"]}" '
                   f'y2="{sy(t):.2f}" stroke="#444444"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{sy(t) + 4:.2f}" '
                   f'text-anchor="end">{t:.3g}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 12}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, ((label, _), y) in enumerate(zip(series, ys)):
        color = PALETTE[i % len(PALETTE)]
        ok = np.isfinite(y)
        # break the polyline at gaps
        segments, current = [], []
        for xi, yi, good in zip(x, y, ok):
            if good:
                current.append(f"{sx(xi):.2f},{sy(yi):.2f}")
            elif current:
                segments.append(current)
                current = []
        if current:
            segments.append(current)
        for seg in segments:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                       f'points="{" ".join(seg)}"/>')
        if markers:
            for xi, yi in zip(x[ok], y[ok]):
                out.append(f'<circle cx="{sx(xi):.2f}" cy="{sy(yi):.2f}" r="3" fill="{color}"/>')
        ly = MARGIN["top"] + 12 + 18 * i
        lx = WIDTH - MARGIN["right"] + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def density_chart_from_csv(header, rows, title=""):
    """Overlay of the ``curves.csv`` columns (first column is ``x``)."""
    data = np.array([[float(c) for c in r] for r in rows])
    return line_chart(data[:, 0], [(h, data[:, j + 1]) for j, h in enumerate(header[1:])],
                      title=title, xlabel="x", ylabel="density")


def metrics_chart_from_csv(header, rows, column="tv_mean", title=""):
    """``column`` against ``m``, one line per estimator, from ``metrics.csv``."""
    ci, mi, vi = header.index("estimator"), header.index("m"), header.index(column)
    names = list(dict.fromkeys(r[ci] for r in rows))
    ms = sorted({float(r[mi]) for r in rows})
    series = []
    for name in names:
        vals = {float(r[mi]): float(r[vi]) for r in rows if r[ci] == name}
        series.append((name, [vals.get(m, float("nan")) for m in ms]))
    return line_chart(ms, series, title=title, xlabel="samples m", ylabel=column, markers=True)
