"""Static SVG reports: grouped boxplots per regime and log-log rate plots.

Figures are emitted as plain SVG 1.1 text, a pure function of the summary
tables, so regenerating from unchanged CSVs is byte identical.  Boxes show
the nearest-rank order statistics (min, Q1, median, Q3, max).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

__all__ = ["BoxStats", "FigureError", "boxplot_svg", "rate_plot_svg", "emit_figures"]


class FigureError(ValueError):
    """Raised when the summary data cannot produce a figure."""


@dataclass(frozen=True)
class BoxStats:
    """One box: label plus the five order statistics."""

    label: str
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float


_MARGIN_LEFT = 64.0
_MARGIN_RIGHT = 16.0
_MARGIN_TOP = 42.0
_MARGIN_BOTTOM = 96.0
_SLOT = 44.0
_PLOT_HEIGHT = 320.0


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(upper: float, count: int = 5) -> list[float]:
    step = upper / count
    return [step * i for i in range(count + 1)]


def boxplot_svg(title: str, boxes: Sequence[BoxStats]) -> str:
    """Grouped boxplot of risk distributions, one box per cell."""
    if not boxes:
        raise FigureError("no boxes to draw")
    upper = max(b.maximum for b in boxes)
    if upper <= 0:
        upper = 1.0
    upper *= 1.05
    width = _MARGIN_LEFT + _MARGIN_RIGHT + _SLOT * len(boxes)
    height = _MARGIN_TOP + _PLOT_HEIGHT + _MARGIN_BOTTOM

    def ty(v: float) -> float:
        return _MARGIN_TOP + _PLOT_HEIGHT * (1.0 - v / upper)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        '<style>text{font-family:monospace;font-size:11px;}</style>',
        f'<text x="{_fmt(_MARGIN_LEFT)}" y="20">{title}</text>',
        f'<line x1="{_fmt(_MARGIN_LEFT)}" y1="{_fmt(ty(0.0))}" '
        f'x2="{_fmt(width - _MARGIN_RIGHT)}" y2="{_fmt(ty(0.0))}" stroke="black"/>',
        f'<line x1="{_fmt(_MARGIN_LEFT)}" y1="{_fmt(_MARGIN_TOP)}" '
        f'x2="{_fmt(_MARGIN_LEFT)}" y2="{_fmt(ty(0.0))}" stroke="black"/>',
    ]
    for tick in _ticks(upper):
        y = ty(tick)
        parts.append(
            f'<line x1="{_fmt(_MARGIN_LEFT - 4)}" y1="{_fmt(y)}" '
            f'x2="{_fmt(_MARGIN_LEFT)}" y2="{_fmt(y)}" stroke="black"/>'
        )
        parts.append(
            f'<text x="4" y="{_fmt(y + 4)}">{tick:.3g}</text>'
        )
    for i, box in enumerate(boxes):
        cx = _MARGIN_LEFT + _SLOT * (i + 0.5)
        half = _SLOT * 0.32
        parts.append('<g class="box">')
        parts.append(
            f'<line x1="{_fmt(cx)}" y1="{_fmt(ty(box.minimum))}" '
            f'x2="{_fmt(cx)}" y2="{_fmt(ty(box.q1))}" stroke="black"/>'
        )
        parts.append(
            f'<line x1="{_fmt(cx)}" y1="{_fmt(ty(box.q3))}" '
            f'x2="{_fmt(cx)}" y2="{_fmt(ty(box.maximum))}" stroke="black"/>'
        )
        for cap in (box.minimum, box.maximum):
            parts.append(
                f'<line x1="{_fmt(cx - half * 0.6)}" y1="{_fmt(ty(cap))}" '
                f'x2="{_fmt(cx + half * 0.6)}" y2="{_fmt(ty(cap))}" stroke="black"/>'
            )
        parts.append(
            f'<rect x="{_fmt(cx - half)}" y="{_fmt(ty(box.q3))}" '
            f'width="{_fmt(2 * half)}" height="{_fmt(ty(box.q1) - ty(box.q3))}" '
            f'fill="none" stroke="black"/>'
        )
        parts.append(
            f'<line x1="{_fmt(cx - half)}" y1="{_fmt(ty(box.median))}" '
            f'x2="{_fmt(cx + half)}" y2="{_fmt(ty(box.median))}" stroke="black" stroke-width="2"/>'
        )
        ly = _MARGIN_TOP + _PLOT_HEIGHT + 12
        parts.append(
            f'<text x="{_fmt(cx)}" y="{_fmt(ly)}" '
            f'transform="rotate(55 {_fmt(cx)} {_fmt(ly)})">{box.label}</text>'
        )
        parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def rate_plot_svg(title: str, points: Sequence[tuple[float, float]], slope: float | None) -> str:
    """Log-log scatter of (size, risk) with the fitted slope annotated."""
    if len(points) < 2:
        raise FigureError("rate plot needs at least two points")
    if any(x <= 0 or y <= 0 for x, y in points):
        raise FigureError("rate plot needs positive sizes and risks")
    xs = [math.log10(x) for x, _ in points]
    ys = [math.log10(y) for _, y in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0
    width, height = 480.0, 360.0
    in_w = width - _MARGIN_LEFT - _MARGIN_RIGHT
    in_h = height - _MARGIN_TOP - 40.0

    def tx(v: float) -> float:
        return _MARGIN_LEFT + in_w * (v - x_lo) / x_span

    def ty(v: float) -> float:
        return _MARGIN_TOP + in_h * (1.0 - (v - y_lo) / y_span)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        '<style>text{font-family:monospace;font-size:11px;}</style>',
        f'<text x="{_fmt(_MARGIN_LEFT)}" y="20">{title}</text>',
        f'<line x1="{_fmt(_MARGIN_LEFT)}" y1="{_fmt(_MARGIN_TOP + in_h)}" '
        f'x2="{_fmt(width - _MARGIN_RIGHT)}" y2="{_fmt(_MARGIN_TOP + in_h)}" stroke="black"/>',
        f'<line x1="{_fmt(_MARGIN_LEFT)}" y1="{_fmt(_MARGIN_TOP)}" '
        f'x2="{_fmt(_MARGIN_LEFT)}" y2="{_fmt(_MARGIN_TOP + in_h)}" stroke="black"/>',
    ]
    path = " ".join(
        f"{'M' if i == 0 else 'L'} {_fmt(tx(x))} {_fmt(ty(y))}" for i, (x, y) in enumerate(zip(xs, ys))
    )
    parts.append(f'<path d="{path}" fill="none" stroke="gray"/>')
    for (x, y), (lx, ly) in zip(points, zip(xs, ys)):
        parts.append(f'<circle cx="{_fmt(tx(lx))}" cy="{_fmt(ty(ly))}" r="3" fill="black"/>')
        parts.append(
            f'<text x="{_fmt(tx(lx) + 6)}" y="{_fmt(ty(ly) - 6)}">{x:g}: {y:.3g}</text>'
        )
    if slope is not None:
        parts.append(
            f'<text x="{_fmt(_MARGIN_LEFT)}" y="{_fmt(height - 12)}">log-log slope: {slope:.3f}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _summary_boxes(rows: Sequence[dict[str, str]]) -> list[BoxStats]:
    boxes = []
    for row in rows:
        if int(row["count"]) < 1:
            raise FigureError(f"cell {row['design']}-nt{row['n_t']}-mt{row['m_t']}-ns{row['n_s']}-ms{row['m_s']} has no risk values")
        label = "baseline" if int(row["K"]) == 0 else f"ns={row['n_s']} ms={row['m_s']}"
        boxes.append(
            BoxStats(
                label,
                float(row["min"]),
                float(row["q1"]),
                float(row["median"]),
                float(row["q3"]),
                float(row["max"]),
            )
        )
    return boxes


def emit_figures(
    summary_rows: Sequence[dict[str, str]],
    out_dir: str | Path,
    name: str,
    expected_cells: Sequence[tuple] | None = None,
) -> list[Path]:
    """Write one grouped boxplot per regime found in the summary rows.

    ``expected_cells`` (keys ``(design, n_t, m_t, n_s, m_s, K)``) enables
    completeness checking: any expected cell absent from the rows raises
    :class:`FigureError` naming the cell.
    """
    if expected_cells is not None:
        have = {
            (r["design"], int(r["n_t"]), int(r["m_t"]), int(r["n_s"]), int(r["m_s"]), int(r["K"]))
            for r in summary_rows
        }
        missing = [key for key in expected_cells if tuple(key) not in have]
        if missing:
            raise FigureError(f"missing cells in summaries: {missing}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    regimes: dict[tuple, list[dict[str, str]]] = {}
    for row in summary_rows:
        regimes.setdefault((row["design"], int(row["n_t"]), int(row["m_t"])), []).append(row)
    written = []
    for (design, n_t, m_t), rows in sorted(regimes.items()):
        rows = sorted(rows, key=lambda r: (int(r["K"]) != 0, int(r["n_s"]), int(r["m_s"])))
        title = f"{name}: {design} design, n_t={n_t}, m_t={m_t} (IMSE over replications)"
        svg = boxplot_svg(title, _summary_boxes(rows))
        path = out / f"boxplot_{name}_{design}_nt{n_t}_mt{m_t}.svg"
        path.write_text(svg, encoding="utf-8")
        written.append(path)
    return written
