"""Deterministic SVG diagrams of case labels over a window of integer classes."""

from __future__ import annotations

from typing import Dict, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

from .engine import REGION_LABELS, region_diagram
from .errors import DimensionError
from .lattice import RationalLike, as_rational_vector

# One fixed colour per case label.  The legend is drawn from this table, so
# changing a colour here changes every diagram and nothing else.
PALETTE: Dict[str, str] = {
    "A": "#4e79a7",
    "B": "#59a14f",
    "C": "#f28e2b",
    "D": "#e15759",
    "E": "#b07aa1",
    "exact": "#76b7b2",
    "lower-only": "#edc948",
    "unknown": "#bab0ac",
}
LEGEND_TEXT: Dict[str, str] = {
    "A": "A: inf, no positive entry",
    "B": "B: inf, pure class on the larger factor",
    "C": "C: lower bound x1/m",
    "D": "D: lower bound x2/n",
    "E": "E: exact x1/m",
    "exact": "exact by the monotone or proportional rule",
    "lower-only": "lower bound only",
    "unknown": "no bound in scope",
}
CELL_MARK: Dict[str, str] = {"exact": "=", "lower-only": "≥", "unknown": "?"}

CELL = 36
MARGIN = 48
LEGEND_WIDTH = 330


def _fmt_vec(x) -> str:
    return "(" + ", ".join(str(v) for v in x) + ")"


def render_region_svg(x: Sequence[RationalLike], window: Tuple[int, int, int, int],
                      path: Optional[str] = None) -> str:
    """Draw one coloured cell per class ``(m, n)`` in ``window`` and return the SVG text.

    ``window = (m_min, m_max, n_min, n_max)``.  ``m`` runs to the right and
    ``n`` upwards.  The output depends only on the arguments, so equal inputs
    give byte-identical files.  When ``path`` is given the text is also
    written there as UTF-8.
    """
    x = as_rational_vector(x)
    if len(x) != 2:
        raise DimensionError("region diagrams are two dimensional")
    if any(v <= 0 for v in x):
        raise ValueError("areas must be positive")
    m0, m1, n0, n1 = window
    if m0 > m1 or n0 > n1:
        raise ValueError("empty window")
    labels = region_diagram(x, window)
    cols, rows = m1 - m0 + 1, n1 - n0 + 1
    grid_w, grid_h = cols * CELL, rows * CELL
    width = MARGIN * 2 + grid_w + LEGEND_WIDTH
    height = max(MARGIN * 2 + grid_h, MARGIN + 22 * len(REGION_LABELS) + 20)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f"<title>{escape('case labels for x = ' + _fmt_vec(x))}</title>",
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    for (m, n), lab in labels.items():
        cx = MARGIN + (m - m0) * CELL
        cy = MARGIN + (n1 - n) * CELL
        out.append(f'<rect x="{cx}" y="{cy}" width="{CELL}" height="{CELL}" fill="{PALETTE[lab]}" '
                   f'stroke="#ffffff" stroke-width="1"><title>({m}, {n}): {escape(lab)}</title></rect>')
        short = CELL_MARK.get(lab, lab)
        out.append(f'<text x="{cx + CELL // 2}" y="{cy + CELL // 2 + 4}" text-anchor="middle" '
                   f'fill="#ffffff">{escape(short)}</text>')
    for m in range(m0, m1 + 1):
        out.append(f'<text x="{MARGIN + (m - m0) * CELL + CELL // 2}" y="{MARGIN + grid_h + 16}" '
                   f'text-anchor="middle">{m}</text>')
    for n in range(n0, n1 + 1):
        out.append(f'<text x="{MARGIN - 8}" y="{MARGIN + (n1 - n) * CELL + CELL // 2 + 4}" '
                   f'text-anchor="end">{n}</text>')
    out.append(f'<text x="{MARGIN + grid_w // 2}" y="{MARGIN + grid_h + 34}" text-anchor="middle">m</text>')
    out.append(f'<text x="{MARGIN - 30}" y="{MARGIN + grid_h // 2}" text-anchor="middle">n</text>')
    out.append(f'<text x="{MARGIN}" y="{MARGIN - 16}">{escape("x = " + _fmt_vec(x))}</text>')
    lx = MARGIN * 2 + grid_w
    for i, lab in enumerate(REGION_LABELS):
        ly = MARGIN + 22 * i
        out.append(f'<rect x="{lx}" y="{ly}" width="14" height="14" fill="{PALETTE[lab]}"/>')
        out.append(f'<text x="{lx + 22}" y="{ly + 12}">{escape(LEGEND_TEXT[lab])}</text>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text
