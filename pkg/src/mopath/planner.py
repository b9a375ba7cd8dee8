"""Deterministic A* over the 8-connected grid, with a zero-heuristic Dijkstra mode.

Open-list priority is ``(f, g, insertion sequence)``; neighbours are pushed in
the fixed order N, NE, E, SE, S, SW, W, NW.  Banned cells are never expanded
and edges into them are simply absent.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .cost_model import (
    CostWeights,
    EdgeCostBreakdown,
    NormalizationConstants,
    edge_cost,
    energy_cost,
    feasible_edge_mask,
    risk_cost,
    science_cost,
)
from .errors import BannedEndpointError, ConfigError, NoPathError, PlannerError
from .raster_map import OFFSETS, STEP_FACTORS, Cell, MapStack

ADMISSIBLE = "admissible"
ZERO = "zero"


@dataclass(frozen=True)
class PlanRequest:
    start: Cell
    goal: Cell
    weights: CostWeights
    heuristic_mode: str = ADMISSIBLE

    def __post_init__(self):
        object.__setattr__(self, "start", (int(self.start[0]), int(self.start[1])))
        object.__setattr__(self, "goal", (int(self.goal[0]), int(self.goal[1])))
        if self.heuristic_mode not in (ADMISSIBLE, ZERO):
            raise ConfigError(f"unknown heuristic mode {self.heuristic_mode!r}")


@dataclass
class RawPath:
    cells: List[Cell]
    edge_breakdowns: List[EdgeCostBreakdown]
    total_cost: float
    node_science: List[float]
    edge_lengths: List[float]
    expanded: int = 0

    @property
    def component_sums(self) -> Tuple[float, float, float]:
        e = math.fsum(b.energy for b in self.edge_breakdowns)
        r = math.fsum(b.risk for b in self.edge_breakdowns)
        i = math.fsum(b.science for b in self.edge_breakdowns)
        return e, r, i


class CostField:
    """Per-direction edge cost tables for one (map, norms, weights) combination.

    ``totals[k][u]`` is the weighted cost of moving from flat cell index ``u``
    in direction ``k``; ``inf`` when the move is infeasible.
    """

    def __init__(self, stack: MapStack, weights: CostWeights, norms: NormalizationConstants):
        self.stack = stack
        self.weights = weights
        self.norms = norms
        n_rows, n_cols = stack.geometry.shape
        self.n_cols = n_cols
        self.size = n_rows * n_cols
        self.offsets = tuple(dr * n_cols + dc for dr, dc in OFFSETS)

        mask = feasible_edge_mask(stack)
        slopes = np.where(mask, stack.slopes, 0.0)
        rock_dst = np.zeros_like(slopes)
        sci_dst = np.zeros_like(slopes)
        for k, (dr, dc) in enumerate(OFFSETS):
            src_r = slice(max(0, -dr), n_rows - max(0, dr))
            src_c = slice(max(0, -dc), n_cols - max(0, dc))
            dst_r = slice(max(0, dr), n_rows - max(0, -dr))
            dst_c = slice(max(0, dc), n_cols - max(0, -dc))
            rock_dst[k, src_r, src_c] = stack.rock[dst_r, dst_c]
            sci_dst[k, src_r, src_c] = stack.science[dst_r, dst_c]
        dist = np.array(STEP_FACTORS).reshape(8, 1, 1) * stack.geometry.cell_size
        energy = energy_cost(slopes, rock_dst, dist, norms)
        risk = risk_cost(slopes, rock_dst, dist, norms)
        science = science_cost(sci_dst)
        a1, a2, a3 = weights.as_tuple()
        total = a1 * energy + a2 * risk + a3 * science
        total = np.where(mask, total, np.inf)
        self.total_array = total
        self.totals = [total[k].ravel().tolist() for k in range(8)]

    def index(self, cell: Cell) -> int:
        return cell[0] * self.n_cols + cell[1]

    def cell(self, idx: int) -> Cell:
        return divmod(idx, self.n_cols)

    def heuristic_table(self, goal: Cell, mode: str = ADMISSIBLE) -> List[float]:
        if mode == ZERO or self.norms.h_min_per_meter == 0.0:
            return [0.0] * self.size
        n_rows, n_cols = self.stack.geometry.shape
        rr, cc = np.mgrid[0:n_rows, 0:n_cols]
        dist = np.hypot(rr - goal[0], cc - goal[1]) * self.stack.geometry.cell_size
        return (self.norms.h_min_per_meter * dist).ravel().tolist()


def heuristic(cell: Cell, goal: Cell, norms: NormalizationConstants) -> float:
    """Lower bound on the remaining cost: per-metre minimum rate times Euclidean distance."""
    return norms.h_min_per_meter * math.hypot(cell[0] - goal[0], cell[1] - goal[1]) * norms.cell_size


def _check_endpoints(stack: MapStack, request: PlanRequest) -> None:
    for name, cell in (("start", request.start), ("goal", request.goal)):
        if not stack.geometry.contains(cell):
            raise PlannerError(f"{name} {cell} lies outside the {stack.geometry.shape} map")
        if stack.banned[cell]:
            raise BannedEndpointError(f"{name} {cell} is a banned cell")


def search(field_: CostField, start: Cell, goal: Cell, mode: str = ADMISSIBLE,
           trace: Optional[list] = None):
    """Run the search loop; return ``(parents, g_goal, n_expanded)``.

    ``parents`` maps flat indices to their predecessor (``-1`` for the start).
    If ``trace`` is a list, expanded flat indices are appended to it in order.
    """
    totals = field_.totals
    offsets = field_.offsets
    h = field_.heuristic_table(goal, mode)
    s, t = field_.index(start), field_.index(goal)
    inf = math.inf
    g_best = [inf] * field_.size
    parent = [-1] * field_.size
    closed = bytearray(field_.size)
    g_best[s] = 0.0
    heap = [(h[s], 0.0, 0, s)]
    seq = 0
    expanded = 0
    push, pop = heapq.heappush, heapq.heappop
    dirs = tuple(zip(totals, offsets))
    while heap:
        _, g, _, u = pop(heap)
        if closed[u]:
            continue
        closed[u] = 1
        expanded += 1
        if trace is not None:
            trace.append(u)
        if u == t:
            return parent, g, expanded
        for table, off in dirs:
            w = table[u]
            if w == inf:
                continue
            v = u + off
            if closed[v]:
                continue
            ng = g + w
            if ng < g_best[v]:
                g_best[v] = ng
                parent[v] = u
                seq += 1
                push(heap, (ng + h[v], ng, seq, v))
    raise NoPathError(f"goal {goal} is unreachable from {start}")


def plan(stack: MapStack, request: PlanRequest, norms: NormalizationConstants,
         field_: Optional[CostField] = None) -> RawPath:
    _check_endpoints(stack, request)
    if field_ is None:
        field_ = CostField(stack, request.weights, norms)
    if request.start == request.goal:
        sci = float(science_cost(stack.science[request.start]))
        return RawPath([request.start], [], 0.0, [sci], [], expanded=0)
    parent, g_goal, expanded = search(field_, request.start, request.goal, request.heuristic_mode)
    parents = {request.start: None}
    v = field_.index(request.goal)
    while parent[v] >= 0 and field_.cell(v) not in parents:
        parents[field_.cell(v)] = field_.cell(parent[v])
        v = parent[v]
    path = reconstruct(parents, request.goal, stack, request.weights, norms)
    if not math.isclose(path.total_cost, g_goal, rel_tol=1e-9, abs_tol=1e-12):
        raise PlannerError(f"edge-sum {path.total_cost!r} disagrees with search cost {g_goal!r}")
    path.expanded = expanded
    return path


def reconstruct(parents: Dict[Cell, Optional[Cell]], goal: Cell, stack: MapStack,
                weights: CostWeights, norms: NormalizationConstants) -> RawPath:
    """Walk predecessor links back from ``goal`` and recompute per-edge costs."""
    cells = [goal]
    seen = {goal}
    node = goal
    while True:
        if node not in parents:
            raise PlannerError(f"broken parent chain at {node}")
        prev = parents[node]
        if prev is None:
            break
        if prev in seen:
            raise PlannerError(f"cycle in parent map at {prev}")
        seen.add(prev)
        cells.append(prev)
        node = prev
    cells.reverse()

    breakdowns = [edge_cost(stack, a, b, weights, norms) for a, b in zip(cells, cells[1:])]
    lengths = [stack.geometry.planar_distance(a, b) for a, b in zip(cells, cells[1:])]
    science = [float(science_cost(stack.science[c])) for c in cells]
    total = math.fsum(b.weighted_total for b in breakdowns)
    return RawPath(cells, breakdowns, total, science, lengths)
