"""Map-overlay rendering to binary PPM (for golden tests) and SVG (for people)."""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import MapError
from .raster_map import Cell, MapStack

PALETTE = (
    (31, 119, 180), (255, 127, 14), (44, 160, 44), (214, 39, 40),
    (148, 103, 189), (140, 86, 75), (227, 119, 194), (188, 189, 34),
    (23, 190, 207), (255, 215, 0),
)
HATCH = (120, 30, 30)
HIGHLIGHT = (255, 255, 255)


def color_for(cluster: int) -> Tuple[int, int, int]:
    return PALETTE[cluster % len(PALETTE)]


def _backdrop(stack: MapStack) -> np.ndarray:
    elev = np.where(stack.elevation_valid, stack.elevation, np.nan)
    lo, hi = np.nanmin(elev), np.nanmax(elev)
    span = hi - lo
    gray = np.full(elev.shape, 128.0) if not span > 0 else 40.0 + 175.0 * (elev - lo) / span
    gray = np.nan_to_num(gray, nan=0.0)
    return np.round(gray).astype(np.uint8)


def _check_paths(stack: MapStack, paths):
    for cells, _, _ in paths:
        for cell in cells:
            if not stack.geometry.contains(cell):
                raise MapError(f"path cell {cell} lies outside the map")


def render_ppm(stack: MapStack, paths: Sequence[Tuple[List[Cell], int, bool]],
               scale: int = 4) -> bytes:
    """``paths`` holds ``(cells, cluster_id, highlighted)`` triples.

    Banned cells are hatched; highlighted paths are drawn last, thicker and
    with a white halo.
    """
    _check_paths(stack, paths)
    gray = np.kron(_backdrop(stack), np.ones((scale, scale), dtype=np.uint8))
    img = np.repeat(gray[:, :, None], 3, axis=2)
    banned = np.kron(stack.banned.astype(np.uint8), np.ones((scale, scale), dtype=np.uint8)) > 0
    yy, xx = np.mgrid[0:img.shape[0], 0:img.shape[1]]
    img[banned & ((xx + yy) % 4 == 0)] = HATCH

    def stamp(r, c, color, radius):
        r0, r1 = max(0, r - radius), min(img.shape[0], r + radius + 1)
        c0, c1 = max(0, c - radius), min(img.shape[1], c + radius + 1)
        img[r0:r1, c0:c1] = color

    def draw(cells, color, radius):
        centers = [(r * scale + scale // 2, c * scale + scale // 2) for r, c in cells]
        if len(centers) == 1:
            stamp(*centers[0], color, radius)
        for (r0, c0), (r1, c1) in zip(centers, centers[1:]):
            for t in range(scale + 1):
                stamp(r0 + (r1 - r0) * t // scale, c0 + (c1 - c0) * t // scale, color, radius)

    ordered = sorted(paths, key=lambda p: p[2])
    for cells, cluster, highlighted in ordered:
        if highlighted:
            draw(cells, HIGHLIGHT, 2)
            draw(cells, color_for(cluster), 1)
        else:
            draw(cells, color_for(cluster), 0)
    header = f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode()
    return header + img.astype(np.uint8).tobytes()


def render_svg(stack: MapStack, paths: Sequence[Tuple[List[Cell], int, bool]],
               scale: int = 4) -> str:
    _check_paths(stack, paths)
    gray = _backdrop(stack) // 8 * 8
    n_rows, n_cols = gray.shape
    w, h = n_cols * scale, n_rows * scale
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
           f'viewBox="0 0 {w} {h}">',
           '<defs><pattern id="hatch" width="4" height="4" patternUnits="userSpaceOnUse">'
           f'<path d="M0,4 L4,0" stroke="rgb{HATCH}" stroke-width="1"/></pattern></defs>']
    for r in range(n_rows):
        row = gray[r]
        c = 0
        while c < n_cols:
            end = c
            while end + 1 < n_cols and row[end + 1] == row[c]:
                end += 1
            v = int(row[c])
            out.append(f'<rect x="{c * scale}" y="{r * scale}" width="{(end - c + 1) * scale}" '
                       f'height="{scale}" fill="rgb({v},{v},{v})"/>')
            c = end + 1
    for r, c in np.argwhere(stack.banned):
        out.append(f'<rect x="{c * scale}" y="{r * scale}" width="{scale}" height="{scale}" '
                   f'fill="url(#hatch)"/>')
    for cells, cluster, highlighted in sorted(paths, key=lambda p: p[2]):
        pts = " ".join(f"{c * scale + scale / 2:g},{r * scale + scale / 2:g}" for r, c in cells)
        color = "rgb({},{},{})".format(*color_for(cluster))
        if highlighted:
            out.append(f'<polyline points="{pts}" fill="none" stroke="white" stroke-width="{scale}"/>')
        width = scale / 2 if highlighted else max(1, scale // 4)
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width:g}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def database_overlays(db, report: Optional[object] = None) -> List[Tuple[List[Cell], int, bool]]:
    """Overlay list for every successful record, coloured by cluster when a report is given."""
    overlays = []
    assignments = report.assignments if report is not None else {}
    reps = set(report.representatives) if report is not None else set()
    for rec in db.records:
        if rec.ok and rec.cells:
            overlays.append((rec.cells, assignments.get(rec.idx, 0), rec.idx in reps))
    return overlays
