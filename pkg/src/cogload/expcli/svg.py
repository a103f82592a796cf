"""Dependency-free SVG heat maps for correlation and confusion matrices."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

CELL = 28
MARGIN_LEFT = 140
MARGIN_TOP = 150


def _lerp(a, b, t):
    return tuple(round(x + (y - x) * t) for x, y in zip(a, b))


def _diverging(v: float, vmin: float, vmax: float) -> str:
    # blue (-) -> white (0) -> red (+)
    mid = 0.5 * (vmin + vmax)
    if v >= mid:
        t = 0.0 if vmax == mid else (v - mid) / (vmax - mid)
        rgb = _lerp((255, 255, 255), (178, 24, 43), min(max(t, 0.0), 1.0))
    else:
        t = 0.0 if vmin == mid else (mid - v) / (mid - vmin)
        rgb = _lerp((255, 255, 255), (33, 102, 172), min(max(t, 0.0), 1.0))
    return "#%02x%02x%02x" % rgb


def _sequential(v: float, vmin: float, vmax: float) -> str:
    t = 0.0 if vmax == vmin else (v - vmin) / (vmax - vmin)
    return "#%02x%02x%02x" % _lerp((247, 251, 255), (8, 48, 107), min(max(t, 0.0), 1.0))


def heatmap(
    matrix: np.ndarray,
    row_labels: Sequence[str],
    col_labels: Sequence[str],
    title: str,
    vmin: float,
    vmax: float,
    diverging: bool = True,
    annotate: bool = False,
    value_format: str = "{:.2f}",
    cell: int = CELL,
) -> str:
    """Render ``matrix`` as an SVG document; each cell is a ``<rect class="cell">``."""
    m = np.asarray(matrix, dtype=np.float64)
    n_rows, n_cols = m.shape
    width = MARGIN_LEFT + n_cols * cell + 20
    height = MARGIN_TOP + n_rows * cell + 20
    color = _diverging if diverging else _sequential
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" data-rows="{n_rows}" data-cols="{n_cols}">',
        f'<text x="{MARGIN_LEFT}" y="20" font-family="sans-serif" font-size="14">{escape(title)}</text>',
    ]
    for i, label in enumerate(row_labels):
        y = MARGIN_TOP + i * cell + cell / 2 + 4
        out.append(
            f'<text x="{MARGIN_LEFT - 6}" y="{y:g}" text-anchor="end" font-family="sans-serif" '
            f'font-size="10">{escape(str(label))}</text>'
        )
    for j, label in enumerate(col_labels):
        x = MARGIN_LEFT + j * cell + cell / 2 + 4
        out.append(
            f'<text x="{x:g}" y="{MARGIN_TOP - 6}" transform="rotate(-60 {x:g} {MARGIN_TOP - 6})" '
            f'font-family="sans-serif" font-size="10">{escape(str(label))}</text>'
        )
    for i in range(n_rows):
        for j in range(n_cols):
            v = m[i, j]
            x, y = MARGIN_LEFT + j * cell, MARGIN_TOP + i * cell
            out.append(
                f'<rect class="cell" x="{x}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="{color(v, vmin, vmax)}" stroke="#ffffff"><title>{escape(str(row_labels[i]))} / '
                f'{escape(str(col_labels[j]))}: {value_format.format(v)}</title></rect>'
            )
            if annotate:
                dark = abs(v - vmin) > 0.6 * abs(vmax - vmin) if vmax != vmin else False
                out.append(
                    f'<text x="{x + cell / 2:g}" y="{y + cell / 2 + 4:g}" text-anchor="middle" '
                    f'font-family="sans-serif" font-size="10" fill="{"#ffffff" if dark else "#000000"}">'
                    f"{value_format.format(v)}</text>"
                )
    out.append("</svg>")
    return "\n".join(out) + "\n"
