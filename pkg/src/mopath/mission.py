"""Waypoint-segmented missions: per-segment plans, constrained selection, comparison."""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

from .cost_model import CostConfig, CostWeights, compute_norms
from .errors import ConfigError, ConfigMismatchError, ConstraintInfeasibleError
from .evaluator import PathMetrics, evaluate
from .planner import ADMISSIBLE, CostField, PlanRequest, RawPath, plan
from .raster_map import Cell, MapStack


@dataclass
class MissionPlan:
    waypoints: List[Cell]
    segment_weights: List[CostWeights]
    segments: List[RawPath]
    segment_metrics: List[PathMetrics]
    aggregate: PathMetrics
    map_id: str = ""

    @property
    def cells(self) -> List[Cell]:
        out = list(self.segments[0].cells)
        for seg in self.segments[1:]:
            out.extend(seg.cells[1:])
        return out


def concatenate(segments: Sequence[RawPath]) -> RawPath:
    """Join consecutive segments; the shared waypoint node appears once."""
    first = segments[0]
    cells = list(first.cells)
    breakdowns = list(first.edge_breakdowns)
    science = list(first.node_science)
    lengths = list(first.edge_lengths)
    total = first.total_cost
    for seg in segments[1:]:
        if seg.cells[0] != cells[-1]:
            raise ValueError(f"segment starts at {seg.cells[0]}, previous ended at {cells[-1]}")
        cells.extend(seg.cells[1:])
        breakdowns.extend(seg.edge_breakdowns)
        science.extend(seg.node_science[1:])
        lengths.extend(seg.edge_lengths)
        total += seg.total_cost
    return RawPath(cells, breakdowns, total, science, lengths,
                   expanded=sum(s.expanded for s in segments))


def plan_mission(stack: MapStack, waypoints: Sequence[Cell],
                 weights_per_segment: Sequence[CostWeights],
                 config: Optional[CostConfig] = None, literal_time: bool = False,
                 map_id: str = "") -> MissionPlan:
    """Plan each consecutive waypoint pair independently and evaluate the whole traverse.

    Aggregate risk is composed over every edge of the concatenation, so it is
    not the sum of segment risks.
    """
    config = config or CostConfig()
    waypoints = [(int(r), int(c)) for r, c in waypoints]
    if len(waypoints) < 2:
        raise ConfigError("a mission needs at least two waypoints")
    if len(weights_per_segment) == 1:
        weights_per_segment = list(weights_per_segment) * (len(waypoints) - 1)
    if len(weights_per_segment) != len(waypoints) - 1:
        raise ConfigError(f"{len(waypoints) - 1} segments but {len(weights_per_segment)} weight triples")

    segments, seg_metrics, norms_list = [], [], []
    for (a, b), w in zip(zip(waypoints, waypoints[1:]), weights_per_segment):
        norms = compute_norms(stack, w, config)
        path = plan(stack, PlanRequest(a, b, w, ADMISSIBLE), norms, CostField(stack, w, norms))
        segments.append(path)
        seg_metrics.append(evaluate(path, norms, stack.geometry, literal_time))
        norms_list.append(norms)

    # e_star_max and r_star_max do not depend on the weights, so one norm set
    # back-transforms every segment.
    whole = concatenate(segments)
    aggregate = evaluate(whole, norms_list[0], stack.geometry, literal_time)
    return MissionPlan(waypoints, list(weights_per_segment), segments, seg_metrics, aggregate,
                       map_id)


def select_constrained(dbs: Sequence, energy_bound=math.inf) -> List[int]:
    """Pick one record per segment database.

    Records whose ``energy_rel`` exceeds the bound are discarded; among the
    rest the lowest ``risk_total`` wins, then the highest ``science_total``,
    then the lowest record index.  ``energy_bound`` may be a single number or
    one bound per segment.
    """
    bounds = list(energy_bound) if isinstance(energy_bound, (list, tuple)) else [energy_bound] * len(dbs)
    if len(bounds) != len(dbs):
        raise ConfigError("one energy bound per segment database is required")
    chosen = []
    for seg, (db, bound) in enumerate(zip(dbs, bounds)):
        records = [r for r in getattr(db, "records", db) if r.ok]
        if not records:
            raise ConstraintInfeasibleError(f"segment {seg}: database has no successful records")
        feasible = [r for r in records if r.metrics.energy_rel <= bound]
        if not feasible:
            raise ConstraintInfeasibleError(
                f"segment {seg}: no record with energy_rel <= {bound!r}")
        best = min(feasible, key=lambda r: (r.metrics.risk_total, -r.metrics.science_total, r.idx))
        chosen.append(best.idx)
    return chosen


def _delta(a: float, b: float) -> float:
    if a == b:
        return 0.0
    if a == 0:
        return math.copysign(math.inf, b - a)
    return (b - a) / a * 100.0


def compare_missions(a: MissionPlan, b: MissionPlan) -> List[dict]:
    """Length/Energy/Risk/Science of two missions with percent change of ``b`` relative to ``a``."""
    if a.map_id != b.map_id:
        raise ConfigMismatchError(f"missions planned on different maps ({a.map_id} vs {b.map_id})")
    ma, mb = a.aggregate, b.aggregate
    rows = []
    for name, va, vb in (("Length", ma.length_m, mb.length_m),
                         ("Energy", ma.energy_rel, mb.energy_rel),
                         ("Risk", ma.risk_total, mb.risk_total),
                         ("Science", ma.science_total, mb.science_total)):
        rows.append({"metric": name, "a": va, "b": vb, "delta_pct": _delta(va, vb)})
    return rows


def format_delta(pct: float) -> str:
    if math.isinf(pct):
        return "+inf%" if pct > 0 else "-inf%"
    return f"{pct:+.1f}%"


def format_comparison(rows: List[dict], labels=("a", "b")) -> str:
    lines = [f"{'':8} {labels[0]:>14} {labels[1]:>14} {'delta':>8}"]
    for row in rows:
        lines.append(f"{row['metric']:8} {row['a']:>14.6g} {row['b']:>14.6g} "
                     f"{format_delta(row['delta_pct']):>8}")
    return "\n".join(lines)


def _parse_cells(text: str) -> List[Cell]:
    cells = []
    for item in text.replace("\n", ";").split(";"):
        item = item.strip()
        if item:
            r, c = (int(v) for v in item.split(","))
            cells.append((r, c))
    return cells


def _parse_points(text: str):
    pts = []
    for item in text.replace("\n", ";").split(";"):
        item = item.strip()
        if item:
            x, y = (float(v) for v in item.split(","))
            pts.append((x, y))
    return pts


@dataclass
class MissionSpec:
    """Parsed mission file.

    Sections: ``[maps]`` (dem, rock, science, banned, cost_config - paths
    relative to the file), ``[mission]`` (``waypoints`` as ``r,c; r,c; ...`` or
    ``waypoints_world`` as ``x,y; ...``, optional ``output``), and either
    ``[weights]`` with ``segments = a1,a2,a3; ...`` or ``[constraints]`` with
    ``energy_bound`` (one value or one per segment, ``inf`` allowed) and
    ``steps``/``epsilon`` for the per-segment sweeps.  An optional
    ``[baseline]`` block with ``segments`` plans a reference mission to compare
    against.
    """

    dem: Path
    rock: Optional[Path] = None
    science: Optional[Path] = None
    banned: Optional[Path] = None
    cost_config: Optional[Path] = None
    waypoints: List[Cell] = field(default_factory=list)
    waypoints_world: list = field(default_factory=list)
    weights: Optional[List[CostWeights]] = None
    energy_bound: object = None
    steps: int = 5
    epsilon: float = 1e-2
    baseline: Optional[List[CostWeights]] = None
    output: Optional[Path] = None


def load_mission_spec(path) -> MissionSpec:
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    base = path.parent

    def rel(value):
        return None if value is None else (base / value).resolve()

    if not parser.has_section("maps") or "dem" not in parser["maps"]:
        raise ConfigError(f"{path}: [maps] section with a dem entry is required")
    maps = parser["maps"]
    spec = MissionSpec(dem=rel(maps.get("dem")), rock=rel(maps.get("rock")),
                       science=rel(maps.get("science")), banned=rel(maps.get("banned")),
                       cost_config=rel(maps.get("cost_config")))
    if not parser.has_section("mission"):
        raise ConfigError(f"{path}: [mission] section is required")
    mission = parser["mission"]
    try:
        if "waypoints" in mission:
            spec.waypoints = _parse_cells(mission["waypoints"])
        elif "waypoints_world" in mission:
            spec.waypoints_world = _parse_points(mission["waypoints_world"])
        else:
            raise ConfigError(f"{path}: no waypoints given")
        if "output" in mission:
            spec.output = rel(mission["output"])
        if parser.has_section("weights"):
            spec.weights = [CostWeights.parse(t) for t in parser["weights"]["segments"].split(";")
                            if t.strip()]
        if parser.has_section("constraints"):
            con = parser["constraints"]
            bounds = [float(v) for v in con.get("energy_bound", "inf").split(",")]
            spec.energy_bound = bounds[0] if len(bounds) == 1 else bounds
            spec.steps = con.getint("steps", 5)
            spec.epsilon = con.getfloat("epsilon", 1e-2)
        if parser.has_section("baseline"):
            spec.baseline = [CostWeights.parse(t) for t in parser["baseline"]["segments"].split(";")
                             if t.strip()]
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from None
    if spec.weights is None and spec.energy_bound is None:
        raise ConfigError(f"{path}: either [weights] or [constraints] is required")
    return spec
