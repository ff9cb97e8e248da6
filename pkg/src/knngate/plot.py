"""Self-contained SVG line charts of a report metric against memory size."""
import math
from xml.sax.saxutils import escape

from .report import CSV_COLUMNS

DEFAULT_METRIC = {
    "mode_stability": "mode_error_freq",
    "gate_limit": "delta_h_mean",
    "trust_limit": "w_mean",
    "retriever_limit": "l1_mean",
}

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 40, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _num(s):
    return float(s) if s not in ("", None) else None


def _fmt(v):
    return format(v, ".4g")


def render_svg(rows, metric=None):
    """SVG text: ``metric`` vs log10(n), one series per query, dashed targets."""
    if not rows:
        raise ValueError("report has no data rows")
    experiment = rows[0]["experiment"]
    metric = metric or DEFAULT_METRIC.get(experiment)
    if metric not in CSV_COLUMNS or metric in ("experiment", "x"):
        raise ValueError(f"unknown metric column {metric!r}")
    series = {}
    targets = {}
    for row in rows:
        y = _num(row[metric])
        if y is None:
            continue
        q = int(row["query"])
        series.setdefault(q, []).append((int(row["n"]), y))
        t = _num(row.get("target"))
        if t is not None:
            targets[q] = t
    if not series:
        raise ValueError(f"column {metric!r} is empty for every row")
    for pts in series.values():
        pts.sort()

    xs = [math.log10(n) for pts in series.values() for n, _ in pts]
    ys = [y for pts in series.values() for _, y in pts] + list(targets.values())
    x0, x1 = min(xs), max(xs)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    y0, y1 = min(ys), max(ys)
    pad = 0.08 * (y1 - y0) if y1 > y0 else max(abs(y0) * 0.1, 0.05)
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return TOP + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" font-size="14">'
        f'{escape(experiment)}: {escape(metric)}</text>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for dec in range(math.ceil(x0), math.floor(x1) + 1):
        px = sx(dec)
        out.append(f'<line x1="{px:.1f}" y1="{TOP + ph}" x2="{px:.1f}" y2="{TOP + ph + 5}" stroke="#444"/>')
        out.append(f'<text x="{px:.1f}" y="{TOP + ph + 18}" text-anchor="middle">1e{dec}</text>')
    for i in range(5):
        v = y0 + (y1 - y0) * i / 4
        py = sy(v)
        out.append(f'<line x1="{LEFT - 5}" y1="{py:.1f}" x2="{LEFT}" y2="{py:.1f}" stroke="#444"/>')
        out.append(f'<text x="{LEFT - 8}" y="{py + 4:.1f}" text-anchor="end">{_fmt(v)}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">'
               'memory size n (log scale)</text>')

    for i, q in enumerate(sorted(series)):
        color = COLORS[i % len(COLORS)]
        pts = series[q]
        if q in targets:
            ty = sy(targets[q])
            out.append(f'<line class="target" x1="{LEFT}" y1="{ty:.1f}" x2="{LEFT + pw}" '
                       f'y2="{ty:.1f}" stroke="{color}" stroke-dasharray="6,4"/>')
        coords = " ".join(f"{sx(math.log10(n)):.1f},{sy(y):.1f}" for n, y in pts)
        if len(pts) > 1:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>')
        for n, y in pts:
            out.append(f'<circle class="point" cx="{sx(math.log10(n)):.1f}" cy="{sy(y):.1f}" '
                       f'r="3.5" fill="{color}"/>')
        ly = TOP + 14 + 18 * i
        label = f"query {q}" + (f" (target {_fmt(targets[q])})" if q in targets else "")
        out.append(f'<rect x="{LEFT + pw + 10}" y="{ly - 9}" width="12" height="3" fill="{color}"/>')
        out.append(f'<text x="{LEFT + pw + 26}" y="{ly - 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
