"""CSV, JSON and SVG writers with deterministic formatting."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape


def fmt(value) -> str:
    """Shortest round-trip text for floats; plain str otherwise."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        value = float(value)  # numpy float64 subclasses float
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return repr(value)
    if hasattr(value, "item"):  # other numpy scalars
        return fmt(value.item())
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence],
              comments: Sequence[str] = (), footer: Sequence[str] = ()) -> Path:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    lines += list(comments)
    lines += list(footer)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def _jsonable(value):
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return fmt(value)
    return value


def write_json(path: Path, header: Sequence[str], rows: Iterable[Sequence],
               extra: dict | None = None) -> Path:
    records = [{k: _jsonable(v) for k, v in zip(header, row)} for row in rows]
    payload = {"rows": records}
    if extra:
        payload.update({k: _jsonable(v) if not isinstance(v, (list, dict)) else v
                        for k, v in extra.items()})
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * step:
        out.append(round(v, 12))
        v += step
    return out


def write_svg(path: Path, series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
              xlabel: str = "", ylabel: str = "", title: str = "") -> Path:
    """One polyline per series on linear axes in a fixed 800x600 viewBox."""
    W, H = 800, 600
    left, right, top, bottom = 80, 30, 40, 60
    xs = [x for _, X, Y in series for x, y in zip(X, Y) if math.isfinite(x) and math.isfinite(y)]
    ys = [y for _, X, Y in series for x, y in zip(X, Y) if math.isfinite(x) and math.isfinite(y)]
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(x):
        return left + (x - x0) / (x1 - x0) * (W - left - right)

    def py(y):
        return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" '
           f'width="{W}" height="{H}">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<line x1="{left}" y1="{H - bottom}" x2="{W - right}" y2="{H - bottom}" stroke="black"/>',
           f'<line x1="{left}" y1="{top}" x2="{left}" y2="{H - bottom}" stroke="black"/>']
    for t in _ticks(x0, x1):
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{H - bottom}" x2="{X:.2f}" y2="{H - bottom + 5}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{H - bottom + 20}" font-size="12" '
                   f'text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        Y = py(t)
        out.append(f'<line x1="{left - 5}" y1="{Y:.2f}" x2="{left}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{Y + 4:.2f}" font-size="12" '
                   f'text-anchor="end">{t:g}</text>')
    if title:
        out.append(f'<text x="{W / 2}" y="24" font-size="16" text-anchor="middle">'
                   f'{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{W / 2}" y="{H - 15}" font-size="14" text-anchor="middle">'
                   f'{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="20" y="{H / 2}" font-size="14" text-anchor="middle" '
                   f'transform="rotate(-90 20 {H / 2})">{escape(ylabel)}</text>')
    for k, (name, X, Y) in enumerate(series):
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(X, Y)
                       if math.isfinite(x) and math.isfinite(y))
        color = colors[k % len(colors)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}">'
                   f'<title>{escape(name)}</title></polyline>')
    out.append("</svg>")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n")
    return path
