"""Weighted multi-objective edge cost: energy, crash risk, science and bans.

All distance-dependent quantities are edge costs.  Slope comes from both
endpoints of an edge; rock abundance, interest and the ban flag are sampled at
the destination cell.  Functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigError, EmptyDomainError
from .raster_map import (
    DEFAULT_MAX_ROCK,
    DEFAULT_MAX_SLOPE,
    OFFSETS,
    Cell,
    MapStack,
    direction_index,
    edge_slope,
)

ENERGY_EPSILON = 1e-9
D_SIM = 8.0
VELOCITY = 0.8
WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class PolynomialCoeffs:
    """Quadratic surface p0 + p1*s + p2*r + p3*s^2 + p4*s*r + p5*r^2."""

    p: Tuple[float, float, float, float, float, float]

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        if len(p) != 6 or not all(math.isfinite(v) for v in p):
            raise ConfigError(f"expected six finite coefficients, got {self.p!r}")
        object.__setattr__(self, "p", p)

    def __call__(self, s, r):
        p0, p1, p2, p3, p4, p5 = self.p
        return p0 + p1 * s + p2 * r + p3 * s * s + p4 * s * r + p5 * r * r

    def extrema(self, s_lo: float, s_hi: float, r_lo: float, r_hi: float) -> Tuple[float, float]:
        """Exact (min, max) over the rectangle [s_lo, s_hi] x [r_lo, r_hi].

        Candidates are the corners, the stationary points along each side and
        the interior stationary point.
        """
        _, p1, p2, p3, p4, p5 = self.p
        cands = [(s, r) for s in (s_lo, s_hi) for r in (r_lo, r_hi)]
        if p5 != 0.0:
            for s in (s_lo, s_hi):
                cands.append((s, -(p2 + p4 * s) / (2.0 * p5)))
        if p3 != 0.0:
            for r in (r_lo, r_hi):
                cands.append((-(p1 + p4 * r) / (2.0 * p3), r))
        det = 4.0 * p3 * p5 - p4 * p4
        if det != 0.0:
            cands.append(((-p1 * 2.0 * p5 + p2 * p4) / det, (-p2 * 2.0 * p3 + p1 * p4) / det))
        values = [self(s, r) for s, r in cands if s_lo <= s <= s_hi and r_lo <= r <= r_hi]
        return min(values), max(values)


ENERGY_COEFFS = PolynomialCoeffs((803.0, 10.5, 70.3, 0.739, -1.42, 1770.0))
CRASH_COEFFS = PolynomialCoeffs((-2.88e-2, 5.31e-4, 0.319, 3.14e-4, -2.3e-2, 10.8))


@dataclass(frozen=True)
class CostConfig:
    energy_coeffs: PolynomialCoeffs = ENERGY_COEFFS
    crash_coeffs: PolynomialCoeffs = CRASH_COEFFS
    d_sim: float = D_SIM
    velocity: float = VELOCITY
    max_slope: float = DEFAULT_MAX_SLOPE
    max_rock: float = DEFAULT_MAX_ROCK

    def __post_init__(self):
        for name in ("d_sim", "velocity", "max_slope", "max_rock"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["energy_coeffs"] = list(self.energy_coeffs.p)
        d["crash_coeffs"] = list(self.crash_coeffs.p)
        return d


def _floats(text: str):
    return [float(v) for v in text.replace(",", " ").split()]


def load_cost_config(path=None) -> CostConfig:
    """Read a key-value cost configuration; missing keys keep their defaults.

    Recognised keys: ``energy_coeffs``, ``crash_coeffs`` (six numbers each),
    ``d_sim``, ``velocity``, ``max_slope``, ``max_rock``.  A ``[cost]`` section
    header is optional.
    """
    if path is None:
        return CostConfig()
    text = Path(path).read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        has_section = re.search(r"^\s*\[", text, re.M) is not None
        parser.read_string(text if has_section else "[cost]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not parser.has_section("cost"):
        raise ConfigError(f"{path}: no [cost] section")
    sec = parser["cost"]
    known = {"energy_coeffs", "crash_coeffs", "d_sim", "velocity", "max_slope", "max_rock"}
    unknown = set(sec) - known
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    kwargs = {}
    try:
        for key in ("energy_coeffs", "crash_coeffs"):
            if key in sec:
                kwargs[key] = PolynomialCoeffs(tuple(_floats(sec[key])))
        for key in ("d_sim", "velocity", "max_slope", "max_rock"):
            if key in sec:
                kwargs[key] = float(sec[key])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return CostConfig(**kwargs)


@dataclass(frozen=True)
class CostWeights:
    alpha1: float
    alpha2: float
    alpha3: float

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "alpha3"):
            object.__setattr__(self, name, float(getattr(self, name)))
        a = self.as_tuple()
        if not all(0.0 <= v <= 1.0 for v in a):
            raise ConfigError(f"weights must lie in [0, 1], got {a}")
        if abs(sum(a) - 1.0) > WEIGHT_SUM_TOL:
            raise ConfigError(f"weights must sum to 1, got {a} (sum {sum(a)!r})")

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.alpha1, self.alpha2, self.alpha3)

    @classmethod
    def normalized(cls, a1: float, a2: float, a3: float) -> "CostWeights":
        total = a1 + a2 + a3
        if not total > 0:
            raise ConfigError("weights must not all be zero")
        return cls(a1 / total, a2 / total, a3 / total)

    @classmethod
    def parse(cls, text: str) -> "CostWeights":
        vals = _floats(text)
        if len(vals) != 3:
            raise ConfigError(f"expected three weights, got {text!r}")
        if abs(sum(vals) - 1.0) > WEIGHT_SUM_TOL:
            return cls.normalized(*vals)
        return cls(*vals)


@dataclass(frozen=True)
class NormalizationConstants:
    e_star_max: float
    e_star_min: float
    r_star_max: float
    r_star_min: float
    e_min_edge: float
    r_min_edge: float
    h_min_per_meter: float
    cell_size: float
    slope_bound: float
    rock_range: Tuple[float, float]
    d_sim: float = D_SIM
    velocity: float = VELOCITY
    energy_coeffs: PolynomialCoeffs = field(default=ENERGY_COEFFS, repr=False)
    crash_coeffs: PolynomialCoeffs = field(default=CRASH_COEFFS, repr=False)

    @property
    def max_edge_length(self) -> float:
        return math.sqrt(2.0) * self.cell_size


@dataclass(frozen=True)
class EdgeCostBreakdown:
    energy: float
    risk: float
    science: float
    banned: float
    weighted_total: float


def energy_raw(s, r, d, coeffs: PolynomialCoeffs = ENERGY_COEFFS, d_sim: float = D_SIM):
    """Squared-torque estimate for one edge of length ``d`` metres."""
    return np.maximum(coeffs(s, r), ENERGY_EPSILON) * (d / d_sim)


def crash_rate_raw(s, r, coeffs: PolynomialCoeffs = CRASH_COEFFS):
    """Crash probability per simulation cell, clamped to [0, 1]."""
    return np.clip(coeffs(s, r), 0.0, 1.0)


def scale_crash_rate(raw, d, d_sim: float = D_SIM):
    """Survival-scaled crash probability over ``d`` metres: 1 - (1 - raw)^(d/d_sim)."""
    with np.errstate(divide="ignore"):
        return -np.expm1((d / d_sim) * np.log1p(-raw)) + 0.0


def crash_rate_scaled(s, r, d, norms: NormalizationConstants):
    return scale_crash_rate(crash_rate_raw(s, r, norms.crash_coeffs), d, norms.d_sim)


def energy_cost(s, r, d, norms: NormalizationConstants):
    return energy_raw(s, r, d, norms.energy_coeffs, norms.d_sim) / norms.e_star_max


def risk_cost(s, r, d, norms: NormalizationConstants):
    if norms.r_star_max == 0.0:
        return np.zeros_like(np.asarray(s + r + d, dtype=np.float64))[()]
    return crash_rate_scaled(s, r, d, norms) / norms.r_star_max


def science_cost(interest):
    return 1.0 - interest


def banned_cost(flag) -> float:
    return math.inf if flag else 0.0


def feasible_edge_mask(stack: MapStack) -> np.ndarray:
    """``(8, rows, cols)`` mask of moves between two unbanned, in-grid cells."""
    n_rows, n_cols = stack.geometry.shape
    free = ~stack.banned
    mask = np.zeros((8, n_rows, n_cols), dtype=bool)
    for k, (dr, dc) in enumerate(OFFSETS):
        src_r = slice(max(0, -dr), n_rows - max(0, dr))
        src_c = slice(max(0, -dc), n_cols - max(0, dc))
        dst_r = slice(max(0, dr), n_rows - max(0, -dr))
        dst_c = slice(max(0, dc), n_cols - max(0, -dc))
        mask[k, src_r, src_c] = free[src_r, src_c] & free[dst_r, dst_c]
    mask &= ~np.isnan(stack.slopes)
    return mask


def feasible_domain(stack: MapStack) -> Tuple[float, Tuple[float, float]]:
    """(largest feasible |slope|, (min rock, max rock) over unbanned cells)."""
    free = ~stack.banned
    if not free.any():
        raise EmptyDomainError("every cell is banned; the feasible domain is empty")
    mask = feasible_edge_mask(stack)
    s_max = float(np.abs(stack.slopes[mask]).max()) if mask.any() else 0.0
    rock = stack.rock[free]
    return s_max, (float(rock.min()), float(rock.max()))


def compute_norms(stack: MapStack, weights: CostWeights,
                  config: Optional[CostConfig] = None) -> NormalizationConstants:
    """Map-specific normalisers and the per-metre heuristic rate for ``weights``.

    Extrema of both quadratic surfaces are taken over the feasible rectangle
    [-s_max, s_max] x [r_lo, r_hi].  Maxima are evaluated at the longest edge
    (the diagonal).  The heuristic rate is the smaller per-metre minimum of the
    axis and diagonal edge lengths; for risk the diagonal is the cheaper one
    per metre because survival scaling is concave in distance.
    """
    config = config or CostConfig()
    s_max, (r_lo, r_hi) = feasible_domain(stack)
    cell = stack.geometry.cell_size
    d_axis, d_diag = cell, math.sqrt(2.0) * cell

    e_lo, e_hi = config.energy_coeffs.extrema(-s_max, s_max, r_lo, r_hi)
    e_lo, e_hi = max(e_lo, ENERGY_EPSILON), max(e_hi, ENERGY_EPSILON)
    e_star_max = e_hi * d_diag / config.d_sim
    e_star_min = e_lo * d_diag / config.d_sim
    e_min_edge = e_lo * d_axis / config.d_sim / e_star_max

    c_lo, c_hi = config.crash_coeffs.extrema(-s_max, s_max, r_lo, r_hi)
    c_lo, c_hi = min(max(c_lo, 0.0), 1.0), min(max(c_hi, 0.0), 1.0)
    r_star_max = float(scale_crash_rate(c_hi, d_diag, config.d_sim))
    r_star_min = float(scale_crash_rate(c_lo, d_diag, config.d_sim))
    if r_star_max > 0.0:
        r_min_edge = float(scale_crash_rate(c_lo, d_axis, config.d_sim)) / r_star_max
        r_per_meter = min(r_min_edge / d_axis, r_star_min / r_star_max / d_diag)
    else:
        r_min_edge = r_per_meter = 0.0

    h_min = weights.alpha1 * e_min_edge / d_axis + weights.alpha2 * r_per_meter
    return NormalizationConstants(
        e_star_max=e_star_max,
        e_star_min=e_star_min,
        r_star_max=r_star_max,
        r_star_min=r_star_min,
        e_min_edge=e_min_edge,
        r_min_edge=r_min_edge,
        h_min_per_meter=h_min,
        cell_size=cell,
        slope_bound=s_max,
        rock_range=(r_lo, r_hi),
        d_sim=config.d_sim,
        velocity=config.velocity,
        energy_coeffs=config.energy_coeffs,
        crash_coeffs=config.crash_coeffs,
    )


def edge_cost(stack: MapStack, a: Cell, b: Cell, weights: CostWeights,
              norms: NormalizationConstants) -> EdgeCostBreakdown:
    """Cost of moving from ``a`` to its 8-neighbour ``b``."""
    k = direction_index(a, b)
    s = edge_slope(stack, a, b)
    d = math.hypot(*OFFSETS[k]) * stack.geometry.cell_size
    r = float(stack.rock[b])
    e = float(energy_cost(s, r, d, norms))
    rk = float(risk_cost(s, r, d, norms))
    i = float(science_cost(stack.science[b]))
    ban = banned_cost(stack.banned[b])
    total = weights.alpha1 * e + weights.alpha2 * rk + weights.alpha3 * i
    return EdgeCostBreakdown(e, rk, i, ban, total + ban)
