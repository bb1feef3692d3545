"""Minimal deterministic SVG line plots (no plotting dependency, no timestamps)."""

from __future__ import annotations

import math

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 72, 24, 36, 56
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(x):
    return f"{x:.6g}"


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10.0 ** math.floor(math.log10(span / n))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if span / (step * mult) <= n:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-12 * span:
        out.append(t)
        t += step
    return out


def line_plot(path, series, title="", xlabel="", ylabel="", logy=False):
    """Write a fixed-size SVG with one polyline per (label, xs, ys) series."""
    pts = [(x, y) for _, xs, ys in series for x, y in zip(xs, ys)]
    if not pts:
        raise ValueError("nothing to plot")
    if logy:
        pts = [(x, y) for x, y in pts if y > 0]
        if not pts:
            raise ValueError("log plot needs positive values")
    xs_all = [p[0] for p in pts]
    ys_all = [math.log10(p[1]) if logy else p[1] for p in pts]
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(ys_all), max(ys_all)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def sx(x):
        return _ML + pw * (x - x0) / (x1 - x0)

    def sy(y):
        v = math.log10(y) if logy else y
        return _MT + ph * (1.0 - (v - y0) / (y1 - y0))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_W // 2}" y="22" text-anchor="middle" font-size="15" '
            f'font-family="sans-serif">{title}</text>'
        )
    for t in _ticks(x0, x1):
        X = sx(t)
        parts.append(f'<line x1="{_fmt(X)}" y1="{_MT + ph}" x2="{_fmt(X)}" y2="{_MT + ph + 5}" stroke="#444"/>')
        parts.append(
            f'<text x="{_fmt(X)}" y="{_MT + ph + 20}" text-anchor="middle" font-size="11" '
            f'font-family="sans-serif">{_fmt(t)}</text>'
        )
    for t in _ticks(y0, y1):
        val = 10.0**t if logy else t
        Y = _MT + ph * (1.0 - (t - y0) / (y1 - y0))
        parts.append(f'<line x1="{_ML - 5}" y1="{_fmt(Y)}" x2="{_ML}" y2="{_fmt(Y)}" stroke="#444"/>')
        parts.append(
            f'<text x="{_ML - 8}" y="{_fmt(Y + 4)}" text-anchor="end" font-size="11" '
            f'font-family="sans-serif">{_fmt(val)}</text>'
        )
    if xlabel:
        parts.append(
            f'<text x="{_ML + pw // 2}" y="{_H - 14}" text-anchor="middle" font-size="13" '
            f'font-family="sans-serif">{xlabel}</text>'
        )
    if ylabel:
        parts.append(
            f'<text x="18" y="{_MT + ph // 2}" text-anchor="middle" font-size="13" '
            f'font-family="sans-serif" transform="rotate(-90 18 {_MT + ph // 2})">{ylabel}</text>'
        )
    for k, (label, xs, ys) in enumerate(series):
        color = _COLORS[k % len(_COLORS)]
        pairs = [(x, y) for x, y in zip(xs, ys) if (y > 0 or not logy)]
        coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in pairs)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in pairs:
            parts.append(f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="2.5" fill="{color}"/>')
        if label:
            ly = _MT + 16 + 16 * k
            parts.append(f'<line x1="{_ML + pw - 120}" y1="{ly - 4}" x2="{_ML + pw - 96}" y2="{ly - 4}" stroke="{color}" stroke-width="1.5"/>')
            parts.append(
                f'<text x="{_ML + pw - 90}" y="{ly}" font-size="11" font-family="sans-serif">{label}</text>'
            )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
    return path
