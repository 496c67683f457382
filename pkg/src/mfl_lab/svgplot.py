"""Minimal self-contained SVG line plots.

Only what the command-line reports need: a semilog-y decay plot with a
reference slope, written as a standalone SVG string with no plotting
dependencies.  Output is deterministic for identical inputs.
"""

from __future__ import annotations

import math


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _ticks(lo: float, hi: float, target: int = 6) -> list:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-12 * step:
        out.append(v)
        v += step
    return out


def semilog_decay_svg(times, values, reference_rate: float | None = None,
                      title: str = "", ylabel: str = "") -> str:
    """Semilog-y polyline plot of a positive series, with an optional
    exponential reference line anchored at the first plotted sample."""
    pts = [(float(t), float(v)) for t, v in zip(times, values) if v > 0 and math.isfinite(v)]
    if len(pts) < 2:
        pts = [(0.0, 1.0), (1.0, 1.0)]
    ts = [p[0] for p in pts]
    logs = [math.log10(p[1]) for p in pts]
    t_lo, t_hi = min(ts), max(ts)
    y_lo, y_hi = min(logs), max(logs)
    if y_hi - y_lo < 1e-9:
        y_lo -= 0.5
        y_hi += 0.5
    width, height = 640, 440
    ml, mr, mt, mb = 70, 20, 36, 48

    def sx(t):
        return ml + (t - t_lo) / (t_hi - t_lo or 1.0) * (width - ml - mr)

    def sy(ly):
        return height - mb - (ly - y_lo) / (y_hi - y_lo) * (height - mt - mb)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{width-ml-mr}" height="{height-mt-mb}" '
        'fill="none" stroke="black" stroke-width="1"/>',
    ]
    for tv in _ticks(t_lo, t_hi):
        x = sx(tv)
        parts.append(f'<line x1="{_fmt(x)}" y1="{height-mb}" x2="{_fmt(x)}" '
                     f'y2="{height-mb+5}" stroke="black"/>')
        parts.append(f'<text x="{_fmt(x)}" y="{height-mb+18}" font-size="11" '
                     f'text-anchor="middle">{_fmt(tv)}</text>')
    for ly in _ticks(y_lo, y_hi):
        y = sy(ly)
        parts.append(f'<line x1="{ml-5}" y1="{_fmt(y)}" x2="{ml}" y2="{_fmt(y)}" stroke="black"/>')
        parts.append(f'<text x="{ml-8}" y="{_fmt(y+4)}" font-size="11" '
                     f'text-anchor="end">1e{_fmt(ly)}</text>')
    poly = " ".join(f"{_fmt(sx(t))},{_fmt(sy(l))}" for t, l in zip(ts, logs))
    parts.append(f'<polyline points="{poly}" fill="none" stroke="#1f5fbf" stroke-width="1.5"/>')
    if reference_rate is not None and reference_rate > 0:
        ref = [(t, logs[0] - reference_rate * (t - ts[0]) / math.log(10)) for t in ts]
        ref = [(t, l) for t, l in ref if l >= y_lo - 0.5]
        if len(ref) >= 2:
            rpoly = " ".join(f"{_fmt(sx(t))},{_fmt(sy(l))}" for t, l in ref)
            parts.append(f'<polyline points="{rpoly}" fill="none" stroke="#bf1f1f" '
                         'stroke-width="1.2" stroke-dasharray="6,4"/>')
            parts.append(f'<text x="{width-mr-8}" y="{mt+16}" font-size="11" fill="#bf1f1f" '
                         f'text-anchor="end">reference rate {_fmt(reference_rate)}</text>')
    if title:
        parts.append(f'<text x="{width/2}" y="{mt-12}" font-size="13" '
                     f'text-anchor="middle">{title}</text>')
    if ylabel:
        parts.append(f'<text x="16" y="{(height-mb+mt)/2}" font-size="12" text-anchor="middle" '
                     f'transform="rotate(-90 16 {(height-mb+mt)/2})">{ylabel}</text>')
    parts.append(f'<text x="{(ml+width-mr)/2}" y="{height-10}" font-size="12" '
                 f'text-anchor="middle">t</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
