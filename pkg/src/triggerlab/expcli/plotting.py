"""Minimal self-contained SVG line charts for bound-vs-simulation curves.

No plotting dependency: the emitter writes polylines, axes, ticks and a
legend directly.  Rows are grouped by metric name; each metric contributes
a solid simulated-value line and, where present, a dashed bound line.  The
x coordinate comes from one shared parameter key that every row must carry
in its params echo.
"""

from __future__ import annotations

from triggerlab.errors import PlotError

_WIDTH, _HEIGHT = 720, 440
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 170, 30, 50
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def emit_plot(rows: list, x_key: str, title: str = "") -> str:
    """Render rows as an SVG document string."""
    if not rows:
        raise PlotError("no rows to plot")
    series: dict = {}
    for row in rows:
        params = _parse_echo(row.params)
        if x_key not in params:
            raise PlotError(f"row metric {row.metric!r} lacks x parameter {x_key!r}")
        x = float(params[x_key])
        entry = series.setdefault(row.metric, {"xs": [], "values": [], "bounds": []})
        entry["xs"].append(x)
        entry["values"].append(float(row.value))
        entry["bounds"].append(None if row.bound is None else float(row.bound))

    xs_all, ys_all = [], []
    for entry in series.values():
        xs_all.extend(entry["xs"])
        ys_all.extend(entry["values"])
        ys_all.extend(b for b in entry["bounds"] if b is not None)
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_lo == x_hi:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_lo == y_hi:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def sx(x: float) -> float:
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        return _MARGIN_T + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#444" stroke-width="1"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_WIDTH / 2:.1f}" y="20" text-anchor="middle" '
            f'font-family="monospace" font-size="13">{_esc(title)}</text>'
        )
    for i in range(5):
        fx = x_lo + (x_hi - x_lo) * i / 4
        fy = y_lo + (y_hi - y_lo) * i / 4
        px, py = sx(fx), sy(fy)
        parts.append(f'<line x1="{px:.1f}" y1="{_MARGIN_T + plot_h}" x2="{px:.1f}" '
                     f'y2="{_MARGIN_T + plot_h + 5}" stroke="#444"/>')
        parts.append(f'<text x="{px:.1f}" y="{_MARGIN_T + plot_h + 18}" '
                     f'text-anchor="middle" font-family="monospace" font-size="10">'
                     f'{fx:.4g}</text>')
        parts.append(f'<line x1="{_MARGIN_L - 5}" y1="{py:.1f}" x2="{_MARGIN_L}" '
                     f'y2="{py:.1f}" stroke="#444"/>')
        parts.append(f'<text x="{_MARGIN_L - 8}" y="{py + 3:.1f}" text-anchor="end" '
                     f'font-family="monospace" font-size="10">{fy:.4g}</text>')
    parts.append(f'<text x="{_MARGIN_L + plot_w / 2:.1f}" y="{_HEIGHT - 12}" '
                 f'text-anchor="middle" font-family="monospace" font-size="11">'
                 f'{_esc(x_key)}</text>')

    legend_y = _MARGIN_T + 12
    for idx, (metric, entry) in enumerate(sorted(series.items())):
        color = _COLORS[idx % len(_COLORS)]
        order = sorted(range(len(entry["xs"])), key=lambda i: entry["xs"][i])
        pts = [(sx(entry["xs"][i]), sy(entry["values"][i])) for i in order]
        parts.append(_polyline(pts, color, dashed=False))
        for px, py in pts:
            parts.append(f'<circle cx="{px:.1f}" cy="{py:.1f}" r="2.5" fill="{color}"/>')
        bound_pts = [(sx(entry["xs"][i]), sy(entry["bounds"][i]))
                     for i in order if entry["bounds"][i] is not None]
        if bound_pts:
            parts.append(_polyline(bound_pts, color, dashed=True))
        lx = _WIDTH - _MARGIN_R + 10
        parts.append(f'<line x1="{lx}" y1="{legend_y - 4}" x2="{lx + 18}" '
                     f'y2="{legend_y - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 24}" y="{legend_y}" font-family="monospace" '
                     f'font-size="10">{_esc(metric)}</text>')
        legend_y += 14
        if bound_pts:
            parts.append(f'<line x1="{lx}" y1="{legend_y - 4}" x2="{lx + 18}" '
                         f'y2="{legend_y - 4}" stroke="{color}" stroke-width="2" '
                         f'stroke-dasharray="4 3"/>')
            parts.append(f'<text x="{lx + 24}" y="{legend_y}" font-family="monospace" '
                         f'font-size="10">bound</text>')
            legend_y += 14
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _polyline(pts: list, color: str, dashed: bool) -> str:
    if len(pts) == 1:
        pts = pts * 2
    coords = " ".join(f"{x:.1f},{y:.1f}" for x, y in pts)
    dash = ' stroke-dasharray="4 3"' if dashed else ""
    return (f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"{dash}/>')


def _parse_echo(echo: str) -> dict:
    out = {}
    if not echo:
        return out
    for part in echo.split(";"):
        if "=" in part:
            k, _, v = part.partition("=")
            out[k] = v
    return out


def _esc(s: str) -> str:
    return (s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))
