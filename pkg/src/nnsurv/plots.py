"""Minimal hand-written SVG charts: grouped box plots and a log-log line plot.

Both are pure functions of their input table, so regenerating from a saved
CSV reproduces the same bytes.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

W, H = 640, 360
PAD_L, PAD_R, PAD_T, PAD_B = 60, 20, 30, 80


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _frame(title, ylabel, body):
    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<text x="14" y="{H / 2}" transform="rotate(-90 14 {H / 2})" '
        f'text-anchor="middle">{escape(ylabel)}</text>',
        *body,
        "</svg>", ""])


def _yaxis(lo, hi, to_y, ticks=5, log=False):
    out = [f'<line x1="{PAD_L}" y1="{PAD_T}" x2="{PAD_L}" y2="{H - PAD_B}" stroke="black"/>']
    for v in np.linspace(lo, hi, ticks):
        y = to_y(v)
        label = f"{10 ** v:.3g}" if log else f"{v:.3g}"
        out.append(f'<line x1="{PAD_L - 4}" y1="{_fmt(y)}" x2="{PAD_L}" y2="{_fmt(y)}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{PAD_L - 6}" y="{_fmt(y + 4)}" text-anchor="end">{label}</text>')
    return out


def box_stats(values):
    """Median, quartiles and 1.5 IQR whiskers clipped to the data."""
    v = np.sort(np.asarray(values, dtype=float))
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    lo = v[v >= q1 - 1.5 * iqr].min()
    hi = v[v <= q3 + 1.5 * iqr].max()
    return float(lo), float(q1), float(med), float(q3), float(hi)


def boxplot_svg(groups: dict, title: str = "", ylabel: str = "c-index") -> str:
    """One box per key of ``groups`` (label -> list of values), in key order."""
    groups = {k: [x for x in v if math.isfinite(x)] for k, v in groups.items()}
    groups = {k: v for k, v in groups.items() if v}
    body = []
    if groups:
        allv = np.concatenate([np.asarray(v, float) for v in groups.values()])
        lo, hi = float(allv.min()), float(allv.max())
        if hi - lo < 1e-9:
            lo, hi = lo - 0.05, hi + 0.05
        span = hi - lo
        lo, hi = lo - 0.05 * span, hi + 0.05 * span

        def to_y(v):
            return PAD_T + (hi - v) / (hi - lo) * (H - PAD_T - PAD_B)

        body += _yaxis(lo, hi, to_y)
        slot = (W - PAD_L - PAD_R) / len(groups)
        for i, (name, vals) in enumerate(groups.items()):
            cx = PAD_L + slot * (i + 0.5)
            bw = min(30.0, slot * 0.6)
            wl, q1, med, q3, wh = box_stats(vals)
            body += [
                f'<line x1="{_fmt(cx)}" y1="{_fmt(to_y(wh))}" x2="{_fmt(cx)}" '
                f'y2="{_fmt(to_y(q3))}" stroke="black"/>',
                f'<line x1="{_fmt(cx)}" y1="{_fmt(to_y(q1))}" x2="{_fmt(cx)}" '
                f'y2="{_fmt(to_y(wl))}" stroke="black"/>',
                f'<rect x="{_fmt(cx - bw / 2)}" y="{_fmt(to_y(q3))}" width="{_fmt(bw)}" '
                f'height="{_fmt(to_y(q1) - to_y(q3))}" fill="#cfe0f3" stroke="black"/>',
                f'<line x1="{_fmt(cx - bw / 2)}" y1="{_fmt(to_y(med))}" x2="{_fmt(cx + bw / 2)}" '
                f'y2="{_fmt(to_y(med))}" stroke="black" stroke-width="2"/>',
                f'<text x="{_fmt(cx)}" y="{H - PAD_B + 14}" text-anchor="end" '
                f'transform="rotate(-40 {_fmt(cx)} {H - PAD_B + 14})">{escape(str(name))}</text>',
            ]
    return _frame(title, ylabel, body)


def loglog_svg(x, y, title: str = "", ylabel: str = "error") -> str:
    """Points joined by a line on log-log axes."""
    x = np.log10(np.asarray(x, dtype=float))
    y = np.log10(np.asarray(y, dtype=float))
    body = []
    if x.size:
        xlo, xhi = float(x.min()), float(x.max())
        ylo, yhi = float(y.min()), float(y.max())
        if xhi - xlo < 1e-12:
            xlo, xhi = xlo - 0.5, xhi + 0.5
        if yhi - ylo < 1e-12:
            ylo, yhi = ylo - 0.5, yhi + 0.5

        def to_x(v):
            return PAD_L + (v - xlo) / (xhi - xlo) * (W - PAD_L - PAD_R)

        def to_y(v):
            return PAD_T + (yhi - v) / (yhi - ylo) * (H - PAD_T - PAD_B)

        body += _yaxis(ylo, yhi, to_y, log=True)
        pts = " ".join(f"{_fmt(to_x(a))},{_fmt(to_y(b))}" for a, b in zip(x, y))
        body.append(f'<polyline points="{pts}" fill="none" stroke="#1f4e8c"/>')
        for a, b in zip(x, y):
            body.append(f'<circle cx="{_fmt(to_x(a))}" cy="{_fmt(to_y(b))}" r="3" fill="#1f4e8c"/>')
            body.append(f'<text x="{_fmt(to_x(a))}" y="{H - PAD_B + 14}" '
                        f'text-anchor="middle">{10 ** a:.0f}</text>')
    return _frame(title, ylabel, body)
