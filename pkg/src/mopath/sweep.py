"""Weight-simplex sweeps and the resulting path database."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .cost_model import CostConfig, CostWeights, compute_norms
from .errors import AllTriplesFailedError, NoPathError
from .evaluator import PathMetrics, evaluate
from .planner import ADMISSIBLE, CostField, PlanRequest, plan
from .raster_map import DIRECTIONS, OFFSETS, Cell, MapStack

CSV_HEADER = ["idx", "alpha1", "alpha2", "alpha3", "cost_E", "cost_R", "cost_I", "cost_total",
              "length_m", "energy_rel", "risk_total", "science_total", "status", "path_rle"]
CORNERS = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
OK = "ok"
NO_PATH = "no_path"


@dataclass
class WeightGrid:
    step_count: int
    triples: List[CostWeights]
    epsilon: float = 1e-2
    corners: bool = True
    dedupe: bool = False


def build_weight_grid(step_count: int = 10, epsilon: float = 1e-2, corners: bool = True,
                      dedupe: bool = False) -> WeightGrid:
    """Log-spaced raw weights on [epsilon, 1] per axis, normalised triple-wise.

    The ``step_count**3`` normalised triples come first in grid order; the
    exact corners (1,0,0), (0,1,0), (0,0,1) are appended when ``corners``.
    """
    if step_count < 2:
        raise ValueError("step_count must be at least 2")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    raw = np.logspace(np.log10(epsilon), 0.0, step_count)
    raw[-1] = 1.0
    triples = []
    for a in raw:
        for b in raw:
            for c in raw:
                total = a + b + c
                triples.append(CostWeights(a / total, b / total, c / total))
    if corners:
        triples.extend(CostWeights(*c) for c in CORNERS)
    if dedupe:
        seen = set()
        unique = []
        for w in triples:
            if w.as_tuple() not in seen:
                seen.add(w.as_tuple())
                unique.append(w)
        triples = unique
    return WeightGrid(step_count, triples, epsilon, corners, dedupe)


def encode_path(cells: Sequence[Cell]) -> str:
    """Run-length encode a path as ``row_col;DIRn;DIRn...``."""
    if not cells:
        return ""
    parts = [f"{cells[0][0]}_{cells[0][1]}"]
    run_dir, run_len = None, 0
    for a, b in zip(cells, cells[1:]):
        d = DIRECTIONS[OFFSETS.index((b[0] - a[0], b[1] - a[1]))]
        if d == run_dir:
            run_len += 1
        else:
            if run_dir is not None:
                parts.append(f"{run_dir}{run_len}")
            run_dir, run_len = d, 1
    if run_dir is not None:
        parts.append(f"{run_dir}{run_len}")
    return ";".join(parts)


def decode_path(text: str) -> List[Cell]:
    if not text:
        return []
    head, *runs = text.split(";")
    r, c = (int(v) for v in head.split("_"))
    cells = [(r, c)]
    for run in runs:
        i = len(run.rstrip("0123456789"))
        dr, dc = OFFSETS[DIRECTIONS.index(run[:i])]
        for _ in range(int(run[i:])):
            r, c = r + dr, c + dc
            cells.append((r, c))
    return cells


@dataclass
class PathRecord:
    idx: int
    weights: CostWeights
    status: str
    cells: List[Cell] = field(default_factory=list)
    cost_total: float = float("nan")
    metrics: Optional[PathMetrics] = None
    expanded: int = 0

    @property
    def ok(self) -> bool:
        return self.status == OK

    @property
    def costs(self) -> Tuple[float, float, float]:
        return self.metrics.component_costs

    def csv_row(self) -> List[str]:
        a = [repr(v) for v in self.weights.as_tuple()]
        if not self.ok:
            return [str(self.idx), *a, "", "", "", "", "", "", "", "", self.status, ""]
        m = self.metrics
        nums = [*m.component_costs, self.cost_total, m.length_m, m.energy_rel, m.risk_total,
                m.science_total]
        return [str(self.idx), *a, *(repr(float(v)) for v in nums), self.status,
                encode_path(self.cells)]


@dataclass
class PathDatabase:
    map_id: str
    start: Cell
    goal: Cell
    records: List[PathRecord]
    meta: dict = field(default_factory=dict)

    def successful(self) -> List[PathRecord]:
        return [r for r in self.records if r.ok]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in self.records:
            writer.writerow(rec.csv_row())
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"map_id": self.map_id, "start": list(self.start), "goal": list(self.goal),
               "n_records": len(self.records),
               "n_failed": sum(not r.ok for r in self.records), **self.meta}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def write(self, out_dir, stem: str = "database") -> Tuple[Path, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path, json_path = out_dir / f"{stem}.csv", out_dir / f"{stem}.json"
        csv_path.write_text(self.to_csv())
        json_path.write_text(self.to_json())
        return csv_path, json_path

    @classmethod
    def read(cls, csv_path, json_path=None) -> "PathDatabase":
        csv_path = Path(csv_path)
        json_path = Path(json_path) if json_path else csv_path.with_suffix(".json")
        meta = json.loads(json_path.read_text()) if json_path.exists() else {}
        records = []
        with open(csv_path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != CSV_HEADER:
                raise ValueError(f"{csv_path}: unexpected header {reader.fieldnames}")
            for row in reader:
                w = CostWeights(float(row["alpha1"]), float(row["alpha2"]), float(row["alpha3"]))
                if row["status"] != OK:
                    records.append(PathRecord(int(row["idx"]), w, row["status"]))
                    continue
                metrics = PathMetrics(
                    length_m=float(row["length_m"]),
                    energy_rel=float(row["energy_rel"]),
                    risk_total=float(row["risk_total"]),
                    science_total=float(row["science_total"]),
                    component_costs=(float(row["cost_E"]), float(row["cost_R"]),
                                     float(row["cost_I"])),
                )
                records.append(PathRecord(int(row["idx"]), w, OK, decode_path(row["path_rle"]),
                                          float(row["cost_total"]), metrics))
        start = tuple(meta.get("start", records[0].cells[0] if records and records[0].cells else (0, 0)))
        goal = tuple(meta.get("goal", records[0].cells[-1] if records and records[0].cells else (0, 0)))
        extra = {k: v for k, v in meta.items()
                 if k not in ("map_id", "start", "goal", "n_records", "n_failed")}
        return cls(meta.get("map_id", ""), start, goal, records, extra)


def compute_map_id(stack: MapStack, config: CostConfig, literal_time: bool = False) -> str:
    h = hashlib.sha256(stack.to_bytes())
    h.update(json.dumps({"config": config.to_dict(), "literal_time": literal_time},
                        sort_keys=True).encode())
    return h.hexdigest()[:16]


def plan_record(stack: MapStack, start: Cell, goal: Cell, weights: CostWeights, idx: int,
                config: CostConfig, literal_time: bool = False) -> PathRecord:
    norms = compute_norms(stack, weights, config)
    try:
        path = plan(stack, PlanRequest(start, goal, weights, ADMISSIBLE), norms,
                    CostField(stack, weights, norms))
    except NoPathError:
        return PathRecord(idx, weights, NO_PATH)
    metrics = evaluate(path, norms, stack.geometry, literal_time)
    return PathRecord(idx, weights, OK, list(path.cells), path.total_cost, metrics, path.expanded)


_WORKER_STATE = {}


def _init_worker(stack, start, goal, config, literal_time):
    _WORKER_STATE.update(stack=stack, start=start, goal=goal, config=config,
                         literal_time=literal_time)


def _run_one(item):
    idx, weights = item
    s = _WORKER_STATE
    return plan_record(s["stack"], s["start"], s["goal"], weights, idx, s["config"],
                       s["literal_time"])


def resolve_workers(workers: Optional[int]) -> int:
    env = os.environ.get("PLANNER_THREADS")
    if env:
        workers = int(env)
    return max(1, int(workers or 1))


def run_sweep(stack: MapStack, start: Cell, goal: Cell, grid: WeightGrid, workers: int = 1,
              config: Optional[CostConfig] = None, literal_time: bool = False,
              timings: Optional[dict] = None) -> PathDatabase:
    """Plan one path per weight triple; records keep grid order.

    Unreachable goals give explicit ``no_path`` records.  If every triple
    fails, :class:`AllTriplesFailedError` carries the database.
    """
    config = config or CostConfig()
    start, goal = (int(start[0]), int(start[1])), (int(goal[0]), int(goal[1]))
    items = list(enumerate(grid.triples))
    t0 = time.perf_counter()
    if workers <= 1:
        records = [plan_record(stack, start, goal, w, i, config, literal_time) for i, w in items]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(stack, start, goal, config, literal_time)) as pool:
            chunk = max(1, len(items) // (4 * workers))
            records = list(pool.map(_run_one, items, chunksize=chunk))
    if timings is not None:
        timings["sweep_seconds"] = time.perf_counter() - t0
        timings["workers"] = workers
        timings["n_records"] = len(records)

    meta = {
        "grid": {"step_count": grid.step_count, "epsilon": grid.epsilon,
                 "corners": grid.corners, "dedupe": grid.dedupe},
        "config": config.to_dict(),
        "literal_time": literal_time,
        "geometry": {"n_rows": stack.geometry.n_rows, "n_cols": stack.geometry.n_cols,
                     "cell_size": stack.geometry.cell_size},
    }
    db = PathDatabase(compute_map_id(stack, config, literal_time), start, goal, records, meta)
    if not db.successful():
        raise AllTriplesFailedError(f"no weight triple reached {goal} from {start}", db)
    return db
