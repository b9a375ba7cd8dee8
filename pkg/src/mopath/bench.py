"""Runtime scaling harness: plan wall time against map size."""

from __future__ import annotations

import time
from typing import Dict, List, Sequence

import numpy as np

from .cost_model import CostConfig, CostWeights, compute_norms
from .planner import CostField, PlanRequest, plan
from .raster_map import nearest_unbanned
from .synth import TerrainParams, synth_stack

DEFAULT_SIZES = (64, 128, 256, 512)
R2_PASS = 0.9


def linear_fit(x: Sequence[float], y: Sequence[float]) -> Dict[str, float]:
    """Least-squares ``y = a*x + b`` with coefficient of determination."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(np.unique(x)) < 2:
        raise ValueError("a linear fit needs at least two distinct map sizes")
    a, b = np.polyfit(x, y, 1)
    resid = y - (a * x + b)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return {"a": float(a), "b": float(b), "r2": r2}


def run_bench(sizes: Sequence[int] = DEFAULT_SIZES, trials: int = 5, n_weights: int = 5,
              seed: int = 0, config: CostConfig = None) -> dict:
    """Mean per-plan time for each size over ``trials`` endpoint pairs x ``n_weights`` triples.

    Endpoints are drawn in the westmost and eastmost tenth of the map so the
    search has to cross it.  Time is split into map creation, norm/cost-table
    initialisation and the search itself.
    """
    sizes = list(sizes)
    if len(set(sizes)) < 2:
        raise ValueError("a linear fit needs at least two distinct map sizes")
    config = config or CostConfig()
    rng = np.random.default_rng(seed)
    rows: List[dict] = []
    for size in sizes:
        t0 = time.perf_counter()
        stack = synth_stack(TerrainParams(rows=size, cols=size, roughness=0.1, seed=seed),
                            config.max_slope, config.max_rock)
        map_time = time.perf_counter() - t0
        band = max(1, size // 10)
        pairs = []
        for _ in range(trials):
            a = (int(rng.integers(size)), int(rng.integers(band)))
            b = (int(rng.integers(size)), int(size - 1 - rng.integers(band)))
            pairs.append((nearest_unbanned(stack, a), nearest_unbanned(stack, b)))
        weights = [CostWeights.normalized(*rng.dirichlet((1.0, 1.0, 1.0))) for _ in range(n_weights)]
        init_times, search_times = [], []
        for start, goal in pairs:
            for w in weights:
                t1 = time.perf_counter()
                norms = compute_norms(stack, w, config)
                field_ = CostField(stack, w, norms)
                t2 = time.perf_counter()
                plan(stack, PlanRequest(start, goal, w), norms, field_)
                t3 = time.perf_counter()
                init_times.append(t2 - t1)
                search_times.append(t3 - t2)
        init_mean = float(np.mean(init_times))
        search_mean = float(np.mean(search_times))
        rows.append({"size": size, "n_pixel": size * size, "map_seconds": map_time,
                     "init_seconds": init_mean, "search_seconds": search_mean,
                     "plan_seconds": init_mean + search_mean, "runs": len(init_times)})
    fit = linear_fit([r["n_pixel"] for r in rows], [r["plan_seconds"] * 1e3 for r in rows])
    return {"sizes": rows, "fit_ms": fit, "pass": fit["r2"] >= R2_PASS,
            "reference_ms_per_pixel": 0.04126}
