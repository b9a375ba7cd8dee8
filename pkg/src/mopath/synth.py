"""Seeded synthetic map layers for desk-scale experiments."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from .raster_map import (
    BANNED,
    ELEVATION,
    ROCK,
    SCIENCE,
    GridGeometry,
    MapStack,
    assemble_stack,
    make_layer,
    write_layer,
)


@dataclass(frozen=True)
class TerrainParams:
    rows: int = 64
    cols: int = 64
    cell_size: float = 5.0
    roughness: float = 0.15    # RMS of the elevation gradient (rise over run)
    hurst: float = 0.8
    rock_density: float = 0.3  # rock patches per 64 cells
    hotspots: int = 3
    seed: int = 0


def fractal_surface(shape: Tuple[int, int], hurst: float, rng: np.random.Generator) -> np.ndarray:
    """Spectral-synthesis fractional Brownian surface with unit RMS gradient."""
    rows, cols = shape
    ky = np.fft.fftfreq(rows)[:, None]
    kx = np.fft.rfftfreq(cols)[None, :]
    k = np.hypot(kx, ky)
    k[0, 0] = 1.0
    amplitude = k ** (-(hurst + 1.0))
    amplitude[0, 0] = 0.0
    noise = rng.normal(size=(rows, cols // 2 + 1)) + 1j * rng.normal(size=(rows, cols // 2 + 1))
    surface = np.fft.irfft2(noise * amplitude, s=shape)
    gy, gx = np.gradient(surface)
    rms = np.sqrt(np.mean(gx * gx + gy * gy))
    return surface / rms if rms > 0 else np.zeros(shape)


def _gaussian_bumps(shape, count, rng, radius=(1.5, 4.0), amplitude=(0.05, 0.25)):
    rows, cols = shape
    field = np.zeros(shape)
    for _ in range(count):
        r0, c0 = rng.uniform(0, rows), rng.uniform(0, cols)
        sigma = rng.uniform(*radius)
        amp = rng.uniform(*amplitude)
        # truncate at 5 sigma; the tail is below 4e-6 of the peak
        reach = int(np.ceil(5.0 * sigma))
        r_lo, r_hi = max(0, int(r0) - reach), min(rows, int(r0) + reach + 1)
        c_lo, c_hi = max(0, int(c0) - reach), min(cols, int(c0) + reach + 1)
        rr, cc = np.mgrid[r_lo:r_hi, c_lo:c_hi]
        field[r_lo:r_hi, c_lo:c_hi] += amp * np.exp(
            -((rr - r0) ** 2 + (cc - c0) ** 2) / (2.0 * sigma * sigma))
    return field


def synth_layers(params: TerrainParams) -> Dict[str, np.ndarray]:
    rng = np.random.default_rng(params.seed)
    shape = (params.rows, params.cols)
    surface = fractal_surface(shape, params.hurst, rng)
    elevation = params.roughness * params.cell_size * surface
    if params.roughness == 0:
        elevation = np.zeros(shape)

    n_patches = int(round(params.rock_density * params.rows * params.cols / 64.0))
    rock = np.clip(_gaussian_bumps(shape, n_patches, rng), 0.0, 1.0)

    interest = _gaussian_bumps(shape, params.hotspots, rng, radius=(2.0, 0.08 * max(shape) + 2.0),
                               amplitude=(0.5, 1.0))
    if interest.max() > 0:
        interest = interest / interest.max()
    return {
        ELEVATION: np.round(elevation, 6),
        ROCK: np.round(rock, 6),
        SCIENCE: np.round(interest, 6),
        BANNED: np.zeros(shape),
    }


def synth_stack(params: TerrainParams, max_slope: float = 30.0, max_rock: float = 0.3) -> MapStack:
    geometry = GridGeometry(params.rows, params.cols, params.cell_size)
    arrays = synth_layers(params)
    layers = [make_layer(kind, values, geometry, np.zeros(geometry.shape, bool))
              for kind, values in arrays.items()]
    return assemble_stack(layers, max_slope=max_slope, max_rock=max_rock)


def write_synth(params: TerrainParams, out_dir, prefix: Optional[str] = None) -> Dict[str, Path]:
    """Write the four layers as ASCII grids; returns the file path per layer kind."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    geometry = GridGeometry(params.rows, params.cols, params.cell_size)
    names = {ELEVATION: "dem", ROCK: "rock", SCIENCE: "science", BANNED: "banned"}
    paths = {}
    for kind, values in synth_layers(params).items():
        path = out_dir / f"{prefix + '_' if prefix else ''}{names[kind]}.asc"
        write_layer(path, make_layer(kind, values, geometry, np.zeros(geometry.shape, bool)))
        paths[kind] = path
    return paths
