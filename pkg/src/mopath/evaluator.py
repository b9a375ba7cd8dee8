"""Back-transform dimensionless path costs into physical metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .cost_model import NormalizationConstants
from .raster_map import GridGeometry

# Per-edge traversal times of the 8 m simulation grid, axis and diagonal.
LITERAL_TIMES = (10.0, math.sqrt(2.0) * 10.0)


@dataclass(frozen=True)
class PathMetrics:
    length_m: float
    energy_rel: float
    risk_total: float
    science_total: float
    component_costs: Tuple[float, float, float]

    def to_dict(self) -> dict:
        return {
            "length_m": self.length_m,
            "energy_rel": self.energy_rel,
            "risk_total": self.risk_total,
            "science_total": self.science_total,
            "cost_E": self.component_costs[0],
            "cost_R": self.component_costs[1],
            "cost_I": self.component_costs[2],
        }


def compose_risk(probabilities: Sequence[float]) -> float:
    """1 - prod(1 - p), accumulated in the log domain."""
    p = np.asarray(probabilities, dtype=np.float64)
    if p.size == 0:
        return 0.0
    with np.errstate(divide="ignore"):
        log_survival = np.log1p(-p).sum()
    # + 0.0 turns -0.0 into 0.0 for risk-free paths
    return float(-np.expm1(log_survival)) + 0.0


def compose_risk_product(probabilities: Sequence[float]) -> float:
    """Direct-product form of :func:`compose_risk`."""
    survival = 1.0
    for p in probabilities:
        survival *= 1.0 - p
    return 1.0 - survival


def invert_crash_rate(risk_cost_value, d, norms: NormalizationConstants):
    """Recover the per-simulation-cell crash rate from a normalised risk cost."""
    scaled = np.asarray(risk_cost_value) * norms.r_star_max
    with np.errstate(divide="ignore"):
        return -np.expm1((norms.d_sim / np.asarray(d)) * np.log1p(-scaled))


def traversal_times(lengths: Sequence[float], geometry: GridGeometry, velocity: float,
                    literal_time: bool = False) -> List[float]:
    if not literal_time:
        return [d / velocity for d in lengths]
    axis, diag = LITERAL_TIMES
    return [diag if d > geometry.cell_size * 1.0000001 else axis for d in lengths]


def evaluate(path, norms: NormalizationConstants, geometry: GridGeometry,
             literal_time: bool = False) -> PathMetrics:
    """Physical metrics of a planned path.

    Energy is the sum of per-edge squared torque times traversal time (edge
    length over the configured velocity, or the fixed 10 s / 14.1 s times
    with ``literal_time``).  Crash risk composes the distance-scaled per-edge
    probabilities; science is one minus the mean science cost over all nodes,
    start included.
    """
    lengths = list(path.edge_lengths)
    breakdowns = path.edge_breakdowns
    times = traversal_times(lengths, geometry, norms.velocity, literal_time)
    energy = math.fsum(b.energy * norms.e_star_max * t for b, t in zip(breakdowns, times))
    risk = compose_risk([b.risk * norms.r_star_max for b in breakdowns])
    n = len(path.node_science)
    science = 1.0 - math.fsum(path.node_science) / n if n else 0.0
    return PathMetrics(
        length_m=math.fsum(lengths),
        energy_rel=energy,
        risk_total=min(max(risk, 0.0), 1.0),
        science_total=min(max(science, 0.0), 1.0),
        component_costs=path.component_sums,
    )


def relative_energy_scaling(metrics: Sequence[PathMetrics], reference: int) -> List[float]:
    """Energy of each entry as a percentage of ``metrics[reference]``."""
    ref = metrics[reference].energy_rel
    if not ref > 0:
        raise ValueError("reference path has zero relative energy")
    return [m.energy_rel / ref * 100.0 for m in metrics]
