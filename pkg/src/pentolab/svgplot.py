"""Small dependency-free SVG line plots for training curves."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ["#1f6feb", "#d1242f", "#1a7f37", "#9a6700", "#8250df",
           "#bf3989", "#57606a", "#0550ae"]

_W, _H = 860, 520
_ML, _MR, _MT, _MB = 70, 190, 45, 55


def _nice_ticks(lo: float, hi: float, target: int = 6):
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    raw = span / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.floor(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * span:
        if t >= lo - 1e-9 * span:
            ticks.append(round(t, 10))
        t += step
    return ticks


def _fmt(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return ("%g" % v)


def write_line_plot(path, series, title="", xlabel="", ylabel="") -> None:
    """series: list of (label, [(x, y), ...]) pairs drawn as polylines."""
    series = [(label, [(float(x), float(y)) for x, y in pts])
              for label, pts in series]
    series = [(label, pts) for label, pts in series if pts]
    if not series:
        raise ValueError("nothing to plot: no series with data points")
    xs = [x for _, pts in series for x, _ in pts]
    ys = [y for _, pts in series for _, y in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.04 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    pw = _W - _ML - _MR
    ph = _H - _MT - _MB

    def sx(x):
        return _ML + pw * (x - x_lo) / (x_hi - x_lo)

    def sy(y):
        return _MT + ph * (1.0 - (y - y_lo) / (y_hi - y_lo))

    parts = []
    parts.append('<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 %d %d" '
                 'font-family="sans-serif" font-size="13">' % (_W, _H))
    parts.append('<rect width="%d" height="%d" fill="white"/>' % (_W, _H))
    if title:
        parts.append('<text x="%d" y="24" font-size="16" text-anchor="middle">%s'
                     '</text>' % (_ML + pw // 2, escape(title)))

    for t in _nice_ticks(x_lo, x_hi):
        x = sx(t)
        parts.append('<line x1="%.1f" y1="%d" x2="%.1f" y2="%d" stroke="#dddddd"/>'
                     % (x, _MT, x, _MT + ph))
        parts.append('<text x="%.1f" y="%d" text-anchor="middle">%s</text>'
                     % (x, _MT + ph + 18, _fmt(t)))
    for t in _nice_ticks(y_lo, y_hi):
        y = sy(t)
        parts.append('<line x1="%d" y1="%.1f" x2="%d" y2="%.1f" stroke="#dddddd"/>'
                     % (_ML, y, _ML + pw, y))
        parts.append('<text x="%d" y="%.1f" text-anchor="end" dy="4">%s</text>'
                     % (_ML - 8, y, _fmt(t)))
    parts.append('<rect x="%d" y="%d" width="%d" height="%d" fill="none" '
                 'stroke="#333333"/>' % (_ML, _MT, pw, ph))
    if xlabel:
        parts.append('<text x="%d" y="%d" text-anchor="middle">%s</text>'
                     % (_ML + pw // 2, _H - 14, escape(xlabel)))
    if ylabel:
        parts.append('<text x="18" y="%d" text-anchor="middle" '
                     'transform="rotate(-90 18 %d)">%s</text>'
                     % (_MT + ph // 2, _MT + ph // 2, escape(ylabel)))

    for i, (label, pts) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join("%.2f,%.2f" % (sx(x), sy(y)) for x, y in sorted(pts))
        parts.append('<polyline points="%s" fill="none" stroke="%s" '
                     'stroke-width="1.8"/>' % (coords, color))
        ly = _MT + 16 + 20 * i
        lx = _ML + pw + 12
        parts.append('<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="%s" '
                     'stroke-width="3"/>' % (lx, ly - 4, lx + 22, ly - 4, color))
        parts.append('<text x="%d" y="%d">%s</text>'
                     % (lx + 28, ly, escape(str(label))))

    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(parts) + "\n")
