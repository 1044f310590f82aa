"""Dependency-free SVG line charts with a log10 y-axis."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=170, top=20, bottom=45)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")
DASHES = ("", "6,3", "2,2", "8,2,2,2")


class PlotError(ValueError):
    pass


def _series(rows, columns, x_col, group_col):
    if not rows:
        raise PlotError("no rows to plot")
    for col in (x_col, *columns):
        if col not in rows[0]:
            raise PlotError(f"unknown column {col!r}")
    groups = []
    if group_col in rows[0]:
        for row in rows:
            if row[group_col] not in groups:
                groups.append(row[group_col])
    else:
        groups = [None]
    series = []
    for col in columns:
        for g in groups:
            pts = []
            for row in rows:
                if g is not None and row[group_col] != g:
                    continue
                x, y = float(row[x_col]), float(row[col])
                if y > 0 and math.isfinite(y) and math.isfinite(x):
                    pts.append((x, math.log10(y)))
            label = col if g is None else f"{g}: {col}"
            series.append((label, pts))
    return series


def render_svg(rows: list[dict], columns, x_col: str = "iteration", group_col: str = "sampler") -> str:
    series = _series(rows, columns, x_col, group_col)
    pts = [p for _, s in series for p in s]
    if not pts:
        raise PlotError("no positive finite values to plot on a log scale")
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = math.floor(min(p[1] for p in pts)), math.ceil(max(p[1] for p in pts))
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return MARGIN["left"] + pw * (x - x0) / (x1 - x0)

    def sy(y):
        return MARGIN["top"] + ph * (1 - (y - y0) / (y1 - y0))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>',
    ]
    for e in range(y0, y1 + 1):
        y = sy(e)
        out.append(f'<line x1="{MARGIN["left"]}" y1="{y:.2f}" x2="{MARGIN["left"] + pw}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{y + 4:.2f}" text-anchor="end">1e{e}</text>')
    for i in range(5):
        x = x0 + (x1 - x0) * i / 4
        out.append(f'<text x="{sx(x):.2f}" y="{HEIGHT - MARGIN["bottom"] + 16}" text-anchor="middle">{x:g}</text>')
    out.append(
        f'<text x="{MARGIN["left"] + pw / 2:.2f}" y="{HEIGHT - 8}" text-anchor="middle">{escape(x_col)}</text>'
    )
    for i, (label, s) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        dash = DASHES[(i // len(PALETTE)) % len(DASHES)]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        if s:
            path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in s)
            out.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash_attr} points="{path}">'
                f"<title>{escape(label)}</title></polyline>"
            )
        ly = MARGIN["top"] + 14 * i + 8
        lx = WIDTH - MARGIN["right"] + 10
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{color}" stroke-width="2"{dash_attr}/>')
        out.append(f'<text x="{lx + 22}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
