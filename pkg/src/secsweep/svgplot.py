"""Minimal deterministic SVG line plots: axes, ticks, polylines, legend.

Pure string assembly with fixed float formatting, so identical inputs give
byte-identical files on every platform.
"""

from __future__ import annotations

import math

PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)

MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64.0, 16.0, 34.0, 46.0


def _fmt(v):
    return f"{v:.2f}"


def _nice_ticks(lo, hi, target=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * step:
        ticks.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return ticks


def _decade_ticks(lo, hi):
    first = math.floor(math.log10(lo))
    last = math.ceil(math.log10(hi))
    return [10.0**e for e in range(first, last + 1) if lo <= 10.0**e <= hi]


def line_plot_svg(series, title="", xlabel="", ylabel="", logx=False, width=720, height=480):
    """Render labeled (xs, ys) series to an SVG document string.

    series: iterable of (label, xs, ys); with logx=True all xs must be > 0.
    """
    series = [(str(label), [float(v) for v in xs], [float(v) for v in ys]) for label, xs, ys in series]
    if not series or any(len(xs) == 0 or len(xs) != len(ys) for _, xs, ys in series):
        raise ValueError("series must be non-empty with matching x/y lengths")
    if logx and any(v <= 0 for _, xs, _ in series for v in xs):
        raise ValueError("log-x plots need strictly positive x values")

    tx = (lambda v: math.log10(v)) if logx else (lambda v: v)
    x_lo = min(tx(v) for _, xs, _ in series for v in xs)
    x_hi = max(tx(v) for _, xs, _ in series for v in xs)
    y_lo = min(v for _, _, ys in series for v in ys)
    y_hi = max(v for _, _, ys in series for v in ys)
    y_lo = min(y_lo, 0.0)
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    y_hi *= 1.05

    plot_w = width - MARGIN_L - MARGIN_R
    plot_h = height - MARGIN_T - MARGIN_B

    def px(v):
        return MARGIN_L + (tx(v) - x_lo) / (x_hi - x_lo) * plot_w

    def py(v):
        return MARGIN_T + (1.0 - (v - y_lo) / (y_hi - y_lo)) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{_fmt(width / 2)}" y="18" text-anchor="middle" font-size="13">{title}</text>',
    ]

    xticks = _decade_ticks(10.0**x_lo, 10.0**x_hi) if logx else _nice_ticks(x_lo, x_hi)
    for t in xticks:
        x = px(t)
        out.append(
            f'<line x1="{_fmt(x)}" y1="{_fmt(MARGIN_T)}" x2="{_fmt(x)}" '
            f'y2="{_fmt(height - MARGIN_B)}" stroke="#dddddd"/>'
        )
        label = f"{t:.6g}"
        out.append(
            f'<text x="{_fmt(x)}" y="{_fmt(height - MARGIN_B + 16)}" text-anchor="middle">{label}</text>'
        )
    for t in _nice_ticks(y_lo, y_hi):
        y = py(t)
        out.append(
            f'<line x1="{_fmt(MARGIN_L)}" y1="{_fmt(y)}" x2="{_fmt(width - MARGIN_R)}" '
            f'y2="{_fmt(y)}" stroke="#dddddd"/>'
        )
        out.append(
            f'<text x="{_fmt(MARGIN_L - 6)}" y="{_fmt(y + 4)}" text-anchor="end">{t:.6g}</text>'
        )

    out.append(
        f'<rect x="{_fmt(MARGIN_L)}" y="{_fmt(MARGIN_T)}" width="{_fmt(plot_w)}" '
        f'height="{_fmt(plot_h)}" fill="none" stroke="black"/>'
    )
    out.append(
        f'<text x="{_fmt(MARGIN_L + plot_w / 2)}" y="{_fmt(height - 8)}" text-anchor="middle">{xlabel}</text>'
    )
    out.append(
        f'<text x="14" y="{_fmt(MARGIN_T + plot_h / 2)}" text-anchor="middle" '
        f'transform="rotate(-90 14 {_fmt(MARGIN_T + plot_h / 2)})">{ylabel}</text>'
    )

    for k, (label, xs, ys) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        points = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
        out.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in zip(xs, ys):
            out.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" r="2.2" fill="{color}"/>')

    legend_x = width - MARGIN_R - 180
    legend_y = MARGIN_T + 8
    for k, (label, _, _) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        y = legend_y + 14 * k
        out.append(
            f'<line x1="{_fmt(legend_x)}" y1="{_fmt(y - 4)}" x2="{_fmt(legend_x + 18)}" '
            f'y2="{_fmt(y - 4)}" stroke="{color}" stroke-width="2"/>'
        )
        out.append(f'<text x="{_fmt(legend_x + 24)}" y="{_fmt(y)}">{label}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"
