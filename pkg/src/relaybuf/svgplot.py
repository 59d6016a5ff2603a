"""Minimal deterministic SVG line charts for sweep tables.

Analytic series are drawn as lines, simulated values as circle markers in the
same colour. The y axis can be logarithmic; non-positive values are skipped
there. Output depends only on the table, so identical tables give identical
files.
"""
from __future__ import annotations

import math
from html import escape

W, H = 720, 480
LEFT, RIGHT, TOP, BOTTOM = 80, 180, 40, 60
COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#000000", "#aec7e8")


def _nice_ticks(lo: float, hi: float, n: int = 6) -> list:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 12))
        v += step
    return ticks


def _finite(v, logy: bool) -> bool:
    return v is not None and isinstance(v, (int, float)) and math.isfinite(v) and (v > 0 or not logy)


def line_chart(table, title: str = "", xlabel: str = "", ylabel: str = "",
               logy: bool = False) -> str:
    xs = [float(x) for x in table.x]
    ys = []
    for s in table.series:
        ys += [v for v in table.analytic[s] if _finite(v, logy)]
        ys += [v for v in table.sim[s] if _finite(v, logy)]
    x_lo, x_hi = min(xs), max(xs)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if not ys:
        ys = [1.0] if logy else [0.0, 1.0]
    if logy:
        y_lo = math.floor(math.log10(min(ys)))
        y_hi = math.ceil(math.log10(max(ys)))
        if y_hi == y_lo:
            y_hi += 1
        yticks = list(range(y_lo, y_hi + 1))
    else:
        y_lo, y_hi = min(0.0, min(ys)), max(ys)
        yticks = _nice_ticks(y_lo, y_hi)
        y_hi = max(y_hi, yticks[-1])
        if y_hi == y_lo:
            y_hi = y_lo + 1.0
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        t = math.log10(y) if logy else y
        return TOP + ph - (t - y_lo) / (y_hi - y_lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{LEFT + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">'
           f'{escape(title)}</text>',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _nice_ticks(x_lo, x_hi):
        if x_lo - 1e-12 <= t <= x_hi + 1e-12:
            x = px(t)
            out.append(f'<line x1="{x:.1f}" y1="{TOP + ph}" x2="{x:.1f}" y2="{TOP + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{x:.1f}" y="{TOP + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in yticks:
        y = TOP + ph - (t - y_lo) / (y_hi - y_lo) * ph
        label = f"1e{t}" if logy else f"{t:g}"
        out.append(f'<line x1="{LEFT - 5}" y1="{y:.1f}" x2="{LEFT + pw}" y2="{y:.1f}" '
                   f'stroke="#dddddd"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.1f}" text-anchor="end">{label}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{H - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {TOP + ph / 2:.1f})">{escape(ylabel)}</text>')

    for k, s in enumerate(table.series):
        col = COLOURS[k % len(COLOURS)]
        pts = [(px(x), py(v)) for x, v in zip(xs, table.analytic[s]) if _finite(v, logy)]
        if pts:
            d = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<polyline points="{d}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        for x, v in zip(xs, table.sim[s]):
            if _finite(v, logy):
                out.append(f'<circle cx="{px(x):.2f}" cy="{py(v):.2f}" r="3" fill="none" stroke="{col}"/>')
        ly = TOP + 10 + 16 * k
        out.append(f'<line x1="{W - RIGHT + 10}" y1="{ly}" x2="{W - RIGHT + 30}" y2="{ly}" '
                   f'stroke="{col}" stroke-width="2"/>')
        out.append(f'<text x="{W - RIGHT + 35}" y="{ly + 4}">{escape(s)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
