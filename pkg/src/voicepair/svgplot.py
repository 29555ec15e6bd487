"""Minimal self-contained SVG line plots.

No external assets or libraries: reports must render anywhere and stay
byte-deterministic.  The peak annotation carries machine-readable
data-peak-hz/data-peak-value attributes so tests (and tooling) can read
back where the maximum landed.
"""

import numpy as np

from .errors import ShapeError

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_MARGIN_LEFT = 62.0
_MARGIN_RIGHT = 18.0
_MARGIN_TOP = 40.0
_MARGIN_BOTTOM = 50.0


def _fmt(v):
    return f"{v:.2f}"


def _tick_label(v):
    return f"{v:.4g}"


def line_plot_svg(x, series, title="", x_label="", y_label="",
                  width=820, height=440, annotate_peak=None, band=None,
                  band_label=None):
    """Render named series over a shared x axis as an SVG string.

    series: mapping name -> y values (all len(x)).  annotate_peak names one
    series whose maximum gets a marker, a dashed drop line, and data-*
    attributes.  band=(lo, hi) shades an x interval.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise ShapeError("x must be a 1-d array with at least 2 points")
    if not series:
        raise ShapeError("at least one series is required")
    for name, y in series.items():
        if len(np.asarray(y)) != len(x):
            raise ShapeError(f"series {name!r} length does not match x")
    if annotate_peak is not None and annotate_peak not in series:
        raise ShapeError(f"annotate_peak {annotate_peak!r} is not a series")

    x_min, x_max = float(x.min()), float(x.max())
    y_all = np.concatenate([np.asarray(y, dtype=np.float64) for y in series.values()])
    y_min = min(0.0, float(y_all.min()))
    y_max = float(y_all.max())
    if y_max == y_min:
        y_max = y_min + 1.0
    y_max += 0.05 * (y_max - y_min)

    plot_w = width - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = height - _MARGIN_TOP - _MARGIN_BOTTOM

    def sx(v):
        return _MARGIN_LEFT + (v - x_min) / (x_max - x_min) * plot_w

    def sy(v):
        return _MARGIN_TOP + (1.0 - (v - y_min) / (y_max - y_min)) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{_fmt(width / 2)}" y="22" font-family="sans-serif" font-size="15" '
        f'text-anchor="middle">{title}</text>',
    ]

    if band is not None:
        lo, hi = float(band[0]), float(band[1])
        out.append(
            f'<rect x="{_fmt(sx(lo))}" y="{_fmt(_MARGIN_TOP)}" '
            f'width="{_fmt(sx(hi) - sx(lo))}" height="{_fmt(plot_h)}" '
            f'fill="#fff3c2" data-band-lo="{lo:g}" data-band-hi="{hi:g}"/>'
        )
        if band_label:
            out.append(
                f'<text x="{_fmt((sx(lo) + sx(hi)) / 2)}" y="{_fmt(_MARGIN_TOP + 14)}" '
                f'font-family="sans-serif" font-size="11" text-anchor="middle" '
                f'fill="#8a6d00">{band_label}</text>'
            )

    # axes and ticks
    x0, y0 = _MARGIN_LEFT, _MARGIN_TOP + plot_h
    out.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x0 + plot_w)}" '
               f'y2="{_fmt(y0)}" stroke="#333333" stroke-width="1"/>')
    out.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(_MARGIN_TOP)}" x2="{_fmt(x0)}" '
               f'y2="{_fmt(y0)}" stroke="#333333" stroke-width="1"/>')
    for i in range(6):
        xv = x_min + (x_max - x_min) * i / 5
        px = sx(xv)
        out.append(f'<line x1="{_fmt(px)}" y1="{_fmt(y0)}" x2="{_fmt(px)}" '
                   f'y2="{_fmt(y0 + 4)}" stroke="#333333" stroke-width="1"/>')
        out.append(f'<text x="{_fmt(px)}" y="{_fmt(y0 + 18)}" font-family="sans-serif" '
                   f'font-size="11" text-anchor="middle">{_tick_label(xv)}</text>')
        yv = y_min + (y_max - y_min) * i / 5
        py = sy(yv)
        out.append(f'<line x1="{_fmt(x0 - 4)}" y1="{_fmt(py)}" x2="{_fmt(x0)}" '
                   f'y2="{_fmt(py)}" stroke="#333333" stroke-width="1"/>')
        out.append(f'<text x="{_fmt(x0 - 8)}" y="{_fmt(py + 4)}" font-family="sans-serif" '
                   f'font-size="11" text-anchor="end">{_tick_label(yv)}</text>')
    out.append(f'<text x="{_fmt(x0 + plot_w / 2)}" y="{_fmt(height - 12)}" '
               f'font-family="sans-serif" font-size="12" text-anchor="middle">{x_label}</text>')
    out.append(f'<text x="16" y="{_fmt(_MARGIN_TOP + plot_h / 2)}" '
               f'font-family="sans-serif" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 16 {_fmt(_MARGIN_TOP + plot_h / 2)})">{y_label}</text>')

    for k, (name, y) in enumerate(series.items()):
        y = np.asarray(y, dtype=np.float64)
        color = _PALETTE[k % len(_PALETTE)]
        points = " ".join(f"{_fmt(sx(xv))},{_fmt(sy(yv))}" for xv, yv in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                   f'data-series="{name}" points="{points}"/>')
        ly = _MARGIN_TOP + 16 + 16 * k
        lx = x0 + plot_w - 150
        out.append(f'<line x1="{_fmt(lx)}" y1="{_fmt(ly - 4)}" x2="{_fmt(lx + 22)}" '
                   f'y2="{_fmt(ly - 4)}" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{_fmt(lx + 28)}" y="{_fmt(ly)}" font-family="sans-serif" '
                   f'font-size="11">{name}</text>')

    if annotate_peak is not None:
        y = np.asarray(series[annotate_peak], dtype=np.float64)
        idx = int(np.argmax(y))
        px, py = sx(float(x[idx])), sy(float(y[idx]))
        out.append(
            f'<g id="peak-annotation" data-peak-series="{annotate_peak}" '
            f'data-peak-hz="{float(x[idx]):g}" data-peak-value="{float(y[idx]):g}">'
            f'<line x1="{_fmt(px)}" y1="{_fmt(py)}" x2="{_fmt(px)}" y2="{_fmt(y0)}" '
            f'stroke="#555555" stroke-width="1" stroke-dasharray="4 3"/>'
            f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="3.5" fill="#d62728"/>'
            f'<text x="{_fmt(px + 6)}" y="{_fmt(py - 8)}" font-family="sans-serif" '
            f'font-size="11">peak {float(x[idx]):.0f}</text></g>'
        )

    out.append("</svg>")
    return "\n".join(out) + "\n"
