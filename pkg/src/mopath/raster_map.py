"""Aligned multi-layer raster maps: ASCII grid I/O, stacking and ban derivation.

Cells are addressed as ``(row, col)`` with row 0 the northernmost row.  Every
layer of a :class:`MapStack` shares one :class:`GridGeometry`.
"""

from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from .errors import (
    AdjacencyError,
    DuplicateLayerError,
    GeometryMismatchError,
    MapError,
    MapFormatError,
    MapRangeError,
)

Cell = Tuple[int, int]

ELEVATION = "elevation"
ROCK = "rock_abundance"
SCIENCE = "scientific_interest"
BANNED = "banned"
LAYER_KINDS = (ELEVATION, ROCK, SCIENCE, BANNED)

_KIND_ALIASES = {
    "dem": ELEVATION,
    "elevation": ELEVATION,
    "rock": ROCK,
    "rock_abundance": ROCK,
    "science": SCIENCE,
    "interest": SCIENCE,
    "scientific_interest": SCIENCE,
    "banned": BANNED,
}

# Fixed neighbour order used everywhere: N, NE, E, SE, S, SW, W, NW.
DIRECTIONS = ("N", "NE", "E", "SE", "S", "SW", "W", "NW")
OFFSETS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))
STEP_FACTORS = tuple(math.hypot(dr, dc) for dr, dc in OFFSETS)

ROCK_TOLERANCE = 1e-6
DEFAULT_MAX_SLOPE = 30.0
DEFAULT_MAX_ROCK = 0.3

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


def canonical_kind(kind: str) -> str:
    try:
        return _KIND_ALIASES[kind.strip().lower()]
    except KeyError:
        raise MapError(f"unknown layer kind {kind!r}; expected one of {LAYER_KINDS}") from None


def direction_index(a: Cell, b: Cell) -> int:
    """Index into :data:`OFFSETS` of the move ``a -> b``; raises if not 8-adjacent."""
    step = (b[0] - a[0], b[1] - a[1])
    try:
        return OFFSETS.index(step)
    except ValueError:
        raise AdjacencyError(f"cells {a} and {b} are not 8-neighbours") from None


@dataclass(frozen=True)
class GridGeometry:
    n_rows: int
    n_cols: int
    cell_size: float
    origin: Tuple[float, float] = (0.0, 0.0)
    nodata: float = -9999.0

    def __post_init__(self):
        if self.n_rows < 2 or self.n_cols < 2:
            raise MapError(f"grid must be at least 2x2, got {self.n_rows}x{self.n_cols}")
        if not self.cell_size > 0:
            raise MapError(f"cell_size must be positive, got {self.cell_size}")

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def contains(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.n_rows and 0 <= cell[1] < self.n_cols

    def cell_center(self, cell: Cell) -> Tuple[float, float]:
        r, c = cell
        x = self.origin[0] + (c + 0.5) * self.cell_size
        y = self.origin[1] + (self.n_rows - r - 0.5) * self.cell_size
        return x, y

    def world_to_cell(self, x: float, y: float) -> Cell:
        c = int(math.floor((x - self.origin[0]) / self.cell_size))
        r = self.n_rows - 1 - int(math.floor((y - self.origin[1]) / self.cell_size))
        cell = (r, c)
        if not self.contains(cell):
            raise MapError(f"world point ({x}, {y}) lies outside the map")
        return cell

    def planar_distance(self, a: Cell, b: Cell) -> float:
        return math.hypot(a[0] - b[0], a[1] - b[1]) * self.cell_size


@dataclass(frozen=True, eq=False)
class MapLayer:
    kind: str
    values: np.ndarray
    geometry: GridGeometry
    nodata_mask: np.ndarray = None

    def __post_init__(self):
        if self.nodata_mask is None:
            object.__setattr__(self, "nodata_mask", np.zeros(self.geometry.shape, dtype=bool))


def make_layer(kind: str, values, geometry: GridGeometry, nodata_mask=None) -> MapLayer:
    """Validate ``values`` for ``kind`` and wrap them in a :class:`MapLayer`.

    Rock abundance must lie in [0, 1] (small excursions up to 1e-6 are clipped),
    banned cells must be 0 or 1, and scientific interest outside [0, 1] is
    min-max normalised with a warning.  Nodata cells are stored as 0.
    """
    kind = canonical_kind(kind)
    arr = np.array(values, dtype=np.float64)
    if arr.shape != geometry.shape:
        raise GeometryMismatchError(f"{kind} values have shape {arr.shape}, geometry is {geometry.shape}")
    if nodata_mask is None:
        nodata_mask = arr == geometry.nodata
    nodata_mask = np.array(nodata_mask, dtype=bool)
    nodata_mask |= ~np.isfinite(arr)
    arr[nodata_mask] = 0.0
    valid = ~nodata_mask

    if kind == ROCK and valid.any():
        lo, hi = arr[valid].min(), arr[valid].max()
        if lo < -ROCK_TOLERANCE or hi > 1.0 + ROCK_TOLERANCE:
            raise MapRangeError(f"rock abundance outside [0, 1]: min={lo}, max={hi}")
        np.clip(arr, 0.0, 1.0, out=arr)
    elif kind == BANNED and valid.any():
        if not np.isin(arr[valid], (0.0, 1.0)).all():
            raise MapRangeError("banned layer must contain only 0 and 1")
    elif kind == SCIENCE and valid.any():
        lo, hi = arr[valid].min(), arr[valid].max()
        if lo < 0.0 or hi > 1.0:
            warnings.warn(
                f"scientific interest outside [0, 1] (min={lo}, max={hi}); min-max normalising",
                stacklevel=2,
            )
            span = hi - lo
            arr[valid] = (arr[valid] - lo) / span if span > 0 else 0.0

    arr.setflags(write=False)
    nodata_mask.setflags(write=False)
    return MapLayer(kind, arr, geometry, nodata_mask)


def load_layer(path, kind: str) -> MapLayer:
    """Read one layer from an ESRI-style ASCII grid file."""
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < len(_HEADER_KEYS):
        raise MapFormatError(f"{path}: truncated header")
    header = {}
    for ln in lines[: len(_HEADER_KEYS)]:
        parts = ln.split()
        if len(parts) != 2:
            raise MapFormatError(f"{path}: bad header line {ln!r}")
        header[parts[0].lower()] = parts[1]
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise MapFormatError(f"{path}: missing header keys {missing}")
    try:
        ncols, nrows = int(header["ncols"]), int(header["nrows"])
        xll, yll = float(header["xllcorner"]), float(header["yllcorner"])
        cellsize, nodata = float(header["cellsize"]), float(header["nodata_value"])
    except ValueError as exc:
        raise MapFormatError(f"{path}: {exc}") from None

    rows = lines[len(_HEADER_KEYS):]
    if len(rows) != nrows:
        raise MapFormatError(f"{path}: expected {nrows} data rows, found {len(rows)}")
    data = np.empty((nrows, ncols), dtype=np.float64)
    for i, ln in enumerate(rows):
        tokens = ln.split()
        if len(tokens) != ncols:
            raise MapFormatError(f"{path}: row {i} has {len(tokens)} values, expected {ncols}")
        try:
            data[i] = [float(t) for t in tokens]
        except ValueError as exc:
            raise MapFormatError(f"{path}: row {i}: {exc}") from None

    geometry = GridGeometry(nrows, ncols, cellsize, (xll, yll), nodata)
    return make_layer(kind, data, geometry, nodata_mask=data == nodata)


def write_layer(path, layer: MapLayer) -> None:
    g = layer.geometry
    values = np.where(layer.nodata_mask, g.nodata, layer.values)
    out = [
        f"ncols {g.n_cols}",
        f"nrows {g.n_rows}",
        f"xllcorner {g.origin[0]!r}",
        f"yllcorner {g.origin[1]!r}",
        f"cellsize {g.cell_size!r}",
        f"nodata_value {g.nodata!r}",
    ]
    out.extend(" ".join(repr(v) for v in row) for row in values.tolist())
    Path(path).write_text("\n".join(out) + "\n")


def compute_slopes(elevation: np.ndarray, valid: np.ndarray, cell_size: float) -> np.ndarray:
    """Signed edge slopes in degrees, shape ``(8, rows, cols)``.

    ``slopes[k, r, c]`` is the inclination of the move from ``(r, c)`` in
    direction ``k``; NaN where the move leaves the grid or touches nodata.
    """
    n_rows, n_cols = elevation.shape
    slopes = np.full((8,) + elevation.shape, np.nan)
    for k, (dr, dc) in enumerate(OFFSETS):
        src_r = slice(max(0, -dr), n_rows - max(0, dr))
        src_c = slice(max(0, -dc), n_cols - max(0, dc))
        dst_r = slice(max(0, dr), n_rows - max(0, -dr))
        dst_c = slice(max(0, dc), n_cols - max(0, -dc))
        dh = elevation[dst_r, dst_c] - elevation[src_r, src_c]
        s = np.degrees(np.arctan2(dh, STEP_FACTORS[k] * cell_size))
        ok = valid[src_r, src_c] & valid[dst_r, dst_c]
        slopes[k, src_r, src_c] = np.where(ok, s, np.nan)
    return slopes


@dataclass(frozen=True, eq=False)
class MapStack:
    geometry: GridGeometry
    elevation: np.ndarray
    rock: np.ndarray
    science: np.ndarray
    banned: np.ndarray
    user_banned: np.ndarray
    elevation_valid: np.ndarray
    rock_valid: np.ndarray
    slopes: np.ndarray
    stats: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    max_slope: float = DEFAULT_MAX_SLOPE
    max_rock: float = DEFAULT_MAX_ROCK

    def layer(self, kind: str) -> MapLayer:
        kind = canonical_kind(kind)
        values = {ELEVATION: self.elevation, ROCK: self.rock, SCIENCE: self.science,
                  BANNED: self.banned.astype(np.float64)}[kind]
        nodata = {ELEVATION: ~self.elevation_valid, ROCK: ~self.rock_valid}.get(
            kind, np.zeros(self.geometry.shape, dtype=bool))
        return MapLayer(kind, values, self.geometry, nodata)

    def is_banned(self, cell: Cell) -> bool:
        return bool(self.banned[cell])

    def to_bytes(self) -> bytes:
        """Canonical serialisation used for hashing and determinism checks."""
        g = self.geometry
        head = repr((g.n_rows, g.n_cols, g.cell_size, tuple(g.origin), g.nodata,
                     self.max_slope, self.max_rock)).encode()
        parts = [head]
        for arr in (self.elevation, self.rock, self.science, self.banned,
                    self.user_banned, self.elevation_valid, self.rock_valid):
            parts.append(np.ascontiguousarray(arr).tobytes())
        return b"".join(parts)

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def assemble_stack(layers: Iterable[MapLayer], max_slope: float = DEFAULT_MAX_SLOPE,
                   max_rock: float = DEFAULT_MAX_ROCK) -> MapStack:
    by_kind: Dict[str, MapLayer] = {}
    for layer in layers:
        if layer.kind in by_kind:
            raise DuplicateLayerError(f"duplicate {layer.kind} layer")
        by_kind[layer.kind] = layer
    if ELEVATION not in by_kind:
        raise MapError("an elevation layer is required")
    geometry = by_kind[ELEVATION].geometry
    for layer in by_kind.values():
        g = layer.geometry
        if (g.n_rows, g.n_cols, g.cell_size, tuple(g.origin)) != (
                geometry.n_rows, geometry.n_cols, geometry.cell_size, tuple(geometry.origin)):
            raise GeometryMismatchError(
                f"{layer.kind} geometry {g.n_rows}x{g.n_cols}@{g.cell_size} does not match "
                f"elevation {geometry.n_rows}x{geometry.n_cols}@{geometry.cell_size}")

    zeros = np.zeros(geometry.shape)
    elev_layer = by_kind[ELEVATION]
    elevation_valid = ~elev_layer.nodata_mask
    rock_layer = by_kind.get(ROCK)
    rock = rock_layer.values if rock_layer is not None else zeros
    rock_valid = ~rock_layer.nodata_mask if rock_layer is not None else np.ones(geometry.shape, bool)
    sci_layer = by_kind.get(SCIENCE)
    science = sci_layer.values if sci_layer is not None else zeros
    user_banned = (by_kind[BANNED].values > 0.5) if BANNED in by_kind else np.zeros(geometry.shape, bool)

    slopes = compute_slopes(elev_layer.values, elevation_valid, geometry.cell_size)
    stack = MapStack(
        geometry=geometry,
        elevation=_freeze(elev_layer.values),
        rock=_freeze(rock),
        science=_freeze(science),
        banned=_freeze(user_banned),
        user_banned=_freeze(user_banned),
        elevation_valid=_freeze(elevation_valid),
        rock_valid=_freeze(rock_valid),
        slopes=_freeze(slopes),
        max_slope=float(max_slope),
        max_rock=float(max_rock),
    )
    banned = derive_banned_mask(stack, max_slope, max_rock).values > 0.5
    object.__setattr__(stack, "banned", _freeze(banned))
    object.__setattr__(stack, "stats", _layer_stats(stack))
    return stack


def _layer_stats(stack: MapStack) -> Dict[str, Tuple[float, float]]:
    def span(values, mask):
        if not mask.any():
            return (math.nan, math.nan)
        v = values[mask]
        return (float(v.min()), float(v.max()))

    everywhere = np.ones(stack.geometry.shape, dtype=bool)
    return {
        ELEVATION: span(stack.elevation, stack.elevation_valid),
        ROCK: span(stack.rock, stack.rock_valid),
        SCIENCE: span(stack.science, everywhere),
        BANNED: span(stack.banned.astype(np.float64), everywhere),
    }


def derive_banned_mask(stack: MapStack, max_slope: float = DEFAULT_MAX_SLOPE,
                       max_rock: float = DEFAULT_MAX_ROCK) -> MapLayer:
    """User bans OR steepest incident edge slope above ``max_slope`` OR rock above ``max_rock``.

    Cells with nodata elevation or rock are always banned.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        steepest = np.nanmax(np.abs(stack.slopes), axis=0)
    steep = np.nan_to_num(steepest, nan=0.0) > max_slope
    rocky = stack.rock > max_rock
    unknown = ~stack.elevation_valid | ~stack.rock_valid
    banned = stack.user_banned | steep | rocky | unknown
    return make_layer(BANNED, banned.astype(np.float64), stack.geometry,
                      nodata_mask=np.zeros(stack.geometry.shape, dtype=bool))


def edge_slope(stack: MapStack, a: Cell, b: Cell) -> float:
    """Signed slope in degrees of the move ``a -> b`` (positive uphill)."""
    k = direction_index(a, b)
    if not (stack.geometry.contains(a) and stack.geometry.contains(b)):
        raise AdjacencyError(f"cells {a}, {b} outside the map")
    return float(stack.slopes[k, a[0], a[1]])


def load_stack(dem, rock=None, science=None, banned=None, max_slope: float = DEFAULT_MAX_SLOPE,
               max_rock: float = DEFAULT_MAX_ROCK) -> MapStack:
    """Convenience loader: file paths per layer, ``None`` for absent layers."""
    layers = [load_layer(dem, ELEVATION)]
    for path, kind in ((rock, ROCK), (science, SCIENCE), (banned, BANNED)):
        if path is not None:
            layers.append(load_layer(path, kind))
    return assemble_stack(layers, max_slope=max_slope, max_rock=max_rock)


def stack_from_arrays(elevation, cell_size: float, rock=None, science=None, banned=None,
                      origin=(0.0, 0.0), max_slope: float = DEFAULT_MAX_SLOPE,
                      max_rock: float = DEFAULT_MAX_ROCK) -> MapStack:
    elevation = np.asarray(elevation, dtype=np.float64)
    geometry = GridGeometry(elevation.shape[0], elevation.shape[1], float(cell_size), tuple(origin))
    layers = [make_layer(ELEVATION, elevation, geometry, np.zeros(elevation.shape, bool))]
    for values, kind in ((rock, ROCK), (science, SCIENCE), (banned, BANNED)):
        if values is not None:
            layers.append(make_layer(kind, values, geometry, np.zeros(elevation.shape, bool)))
    return assemble_stack(layers, max_slope=max_slope, max_rock=max_rock)


def nearest_unbanned(stack: MapStack, cell: Cell) -> Optional[Cell]:
    """Closest unbanned cell to ``cell`` (ties broken by row then column)."""
    free = np.argwhere(~stack.banned)
    if free.size == 0:
        return None
    d2 = (free[:, 0] - cell[0]) ** 2 + (free[:, 1] - cell[1]) ** 2
    i = int(np.argmin(d2))
    return (int(free[i, 0]), int(free[i, 1]))
