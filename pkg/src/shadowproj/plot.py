"""Minimal deterministic SVG line plots (no timestamps, fixed viewport)."""

import math
from dataclasses import dataclass, field

from .exceptions import InputError

WIDTH, HEIGHT = 640, 480
MARGIN = 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class PlotSpec:
    """Series are ``(label, xs, ys)``; guides are ``(slope, label)`` lines
    through the first point of the first series (log-log plots only)."""

    series: list
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    loglog: bool = False
    guides: list = field(default_factory=list)


def _f(x):
    return f"{x:.3f}"


def render_svg(spec):
    if not spec.series or not any(len(s[1]) for s in spec.series):
        raise InputError("plot needs at least one nonempty series", field="series")
    tx = math.log10 if spec.loglog else (lambda v: v)
    pts = []
    for label, xs, ys in spec.series:
        if len(xs) != len(ys):
            raise InputError(f"series {label!r} has mismatched lengths", field="series")
        for x, y in zip(xs, ys):
            if not (math.isfinite(x) and math.isfinite(y)):
                raise InputError("plot coordinates must be finite", field="series")
            if spec.loglog and (x <= 0 or y <= 0):
                raise InputError("log-log plot needs positive coordinates", field="series")
        pts.append([(tx(x), tx(y)) for x, y in zip(xs, ys)])
    allx = [p[0] for s in pts for p in s]
    ally = [p[1] for s in pts for p in s]
    x0, x1 = min(allx), max(allx)
    y0, y1 = min(ally), max(ally)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def sx(v):
        return MARGIN + (v - x0) / (x1 - x0) * (WIDTH - 2 * MARGIN)

    def sy(v):
        return HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2 * MARGIN)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line class="axis" x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line class="axis" x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
    ]
    prefix = "log10 " if spec.loglog else ""
    for k in range(5):
        vx = x0 + (x1 - x0) * k / 4
        vy = y0 + (y1 - y0) * k / 4
        out.append(f'<text x="{_f(sx(vx))}" y="{HEIGHT - MARGIN + 18}" font-size="11" '
                   f'text-anchor="middle">{vx:.3g}</text>')
        out.append(f'<text x="{MARGIN - 6}" y="{_f(sy(vy) + 4)}" font-size="11" '
                   f'text-anchor="end">{vy:.3g}</text>')
    if spec.title:
        out.append(f'<text x="{WIDTH / 2:.0f}" y="24" font-size="14" '
                   f'text-anchor="middle">{_esc(spec.title)}</text>')
    out.append(f'<text x="{WIDTH / 2:.0f}" y="{HEIGHT - 16}" font-size="12" '
               f'text-anchor="middle">{_esc(prefix + spec.xlabel)}</text>')
    out.append(f'<text x="16" y="{HEIGHT / 2:.0f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 16 {HEIGHT / 2:.0f})">{_esc(prefix + spec.ylabel)}</text>')
    for k, ((label, _, _), s) in enumerate(zip(spec.series, pts)):
        color = COLORS[k % len(COLORS)]
        coords = " ".join(f"{_f(sx(x))},{_f(sy(y))}" for x, y in s)
        out.append(f'<polyline class="series" data-label="{_esc(label)}" fill="none" '
                   f'stroke="{color}" stroke-width="2" points="{coords}"/>')
        out.append(f'<text x="{WIDTH - MARGIN}" y="{MARGIN + 14 * k}" font-size="11" '
                   f'text-anchor="end" fill="{color}">{_esc(label)}</text>')
    if spec.guides:
        if not spec.loglog:
            raise InputError("reference slopes need a log-log plot", field="guides")
        ax, ay = pts[0][0]
        for k, (slope, label) in enumerate(spec.guides):
            bx = x1
            by = ay + slope * (bx - ax)
            out.append(
                f'<line class="guide" data-slope="{slope:.6g}" x1="{_f(sx(ax))}" '
                f'y1="{_f(sy(ay))}" x2="{_f(sx(bx))}" y2="{_f(sy(by))}" stroke="gray" '
                f'stroke-dasharray="6,4"/>'
            )
            out.append(f'<text x="{MARGIN + 6}" y="{HEIGHT - MARGIN - 8 - 14 * k}" '
                       f'font-size="11" fill="gray">{_esc(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s):
    return (str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def emit_plot(spec, path):
    text = render_svg(spec)
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write plot: {exc}", file=str(path)) from exc
    return path
