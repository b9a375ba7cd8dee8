"""Command-line front end: ``mopath {plan,sweep,cluster,mission,bench,render,synth}``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from types import SimpleNamespace

from . import bench as bench_mod
from .cluster import cluster_database, cluster_summary, format_summary, normalize_cost_space, variance_vs_k
from .cost_model import CostWeights, compute_norms, load_cost_config
from .errors import (
    ConfigError,
    ConstraintInfeasibleError,
    InfeasibleError,
    MapError,
    PlannerError,
)
from .evaluator import evaluate
from .mission import (
    compare_missions,
    format_comparison,
    load_mission_spec,
    plan_mission,
    select_constrained,
)
from .planner import CostField, PlanRequest, plan
from .raster_map import load_stack
from .render import database_overlays, render_ppm, render_svg
from .sweep import (
    PathDatabase,
    build_weight_grid,
    compute_map_id,
    encode_path,
    resolve_workers,
    run_sweep,
)
from .synth import TerrainParams, write_synth

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INFEASIBLE = 4
EXIT_CONSTRAINT = 5


def _cell(text: str):
    try:
        r, c = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected R,C, got {text!r}") from None
    return (r, c)


def _int_list(text: str):
    return [int(v) for v in text.split(",") if v.strip()]


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_outputs(out: Path, files: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name, data in files.items():
        path = out / name
        if isinstance(data, bytes):
            path.write_bytes(data)
        else:
            path.write_text(data)


def _require_files(*paths):
    for p in paths:
        if p is not None and not Path(p).is_file():
            raise FileNotFoundError(f"no such file: {p}")


def _load_world(args):
    _require_files(args.map_dem, args.map_rock, args.map_science, args.map_banned, args.cost_config)
    config = load_cost_config(args.cost_config)
    stack = load_stack(args.map_dem, args.map_rock, args.map_science, args.map_banned,
                       max_slope=config.max_slope, max_rock=config.max_rock)
    return stack, config


def _edge_dicts(path):
    return [{"energy": b.energy, "risk": b.risk, "science": b.science,
             "weighted_total": b.weighted_total, "length_m": d}
            for b, d in zip(path.edge_breakdowns, path.edge_lengths)]


def cost_table(e: float, r: float, i: float, total: float, length_m: float) -> str:
    """Component-cost table laid out like the per-weight cost tables of mission reports."""
    rows = [("Energy", "E", repr(e)), ("Risk", "R", repr(r)), ("Scientific", "I", repr(i)),
            ("Total", "a1*E + a2*R + a3*I", repr(total)),
            ("Path length", "[km]", repr(length_m / 1000.0))]
    return "\n".join(f"{name:<12} {sym:<20} {val}" for name, sym, val in rows)


def cmd_plan(args) -> int:
    if args.start is None or args.goal is None or args.weights is None:
        raise ConfigError("plan needs --start, --goal and --weights")
    stack, config = _load_world(args)
    weights = CostWeights.parse(args.weights)
    t0 = time.perf_counter()
    norms = compute_norms(stack, weights, config)
    field_ = CostField(stack, weights, norms)
    t1 = time.perf_counter()
    path = plan(stack, PlanRequest(args.start, args.goal, weights, args.heuristic), norms, field_)
    t2 = time.perf_counter()
    metrics = evaluate(path, norms, stack.geometry, args.fixed_time)
    e, r, i = path.component_sums
    doc = {
        "map_id": compute_map_id(stack, config, args.fixed_time),
        "start": list(path.cells[0]), "goal": list(path.cells[-1]),
        "weights": list(weights.as_tuple()),
        "heuristic": args.heuristic,
        "cells": [list(c) for c in path.cells],
        "path_rle": encode_path(path.cells),
        "edges": _edge_dicts(path),
        "total_cost": path.total_cost,
        "metrics": metrics.to_dict(),
        "norms": {"e_star_max": norms.e_star_max, "r_star_max": norms.r_star_max,
                  "e_min_edge": norms.e_min_edge, "r_min_edge": norms.r_min_edge,
                  "h_min_per_meter": norms.h_min_per_meter},
        "config": config.to_dict(),
        "fixed_time": args.fixed_time,
    }
    timing = {"init_seconds": t1 - t0, "search_seconds": t2 - t1, "expanded": path.expanded}
    table = cost_table(e, r, i, path.total_cost, metrics.length_m)
    _write_outputs(Path(args.out), {"path.json": _dump(doc), "path.timing.json": _dump(timing),
                                    "path_table.txt": table + "\n"})
    print(table)
    print(f"energy_rel={metrics.energy_rel!r} risk_total={metrics.risk_total!r} "
          f"science_total={metrics.science_total!r}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.start is None or args.goal is None:
        raise ConfigError("sweep needs --start and --goal")
    stack, config = _load_world(args)
    grid = build_weight_grid(args.steps, args.epsilon, corners=not args.no_corners,
                             dedupe=args.dedupe)
    timings = {}
    db = run_sweep(stack, args.start, args.goal, grid, resolve_workers(args.workers), config,
                   args.fixed_time, timings)
    _write_outputs(Path(args.out), {"database.csv": db.to_csv(), "database.json": db.to_json(),
                                    "database.timing.json": _dump(timings)})
    print(f"{len(db.records)} records, {len(db.successful())} successful, map_id {db.map_id}")
    return EXIT_OK


def cmd_cluster(args) -> int:
    if args.db is None:
        raise ConfigError("cluster needs --db")
    _require_files(args.db)
    db = PathDatabase.read(args.db)
    report = cluster_database(db, args.k, args.seed, args.candidates, resolve_workers(args.workers))
    rows = cluster_summary(report, db)
    sweep_k = variance_vs_k(normalize_cost_space(db), range(2, 9), args.seed)
    text = format_summary(rows)
    vk = "\n".join(f"k={v['k']} mean_variance={v['mean_variance']:.6f} sse={v['sse']:.6f}"
                   for v in sweep_k)
    _write_outputs(Path(args.out), {"clusters.json": report.to_json(),
                                    "clusters_table.txt": text + "\n\n" + vk + "\n"})
    print(text)
    print()
    print(vk)
    return EXIT_OK


def _mission_doc(mission, norms_config, selected=None):
    return {
        "map_id": mission.map_id,
        "waypoints": [list(w) for w in mission.waypoints],
        "segments": [{"weights": list(w.as_tuple()), "path_rle": encode_path(s.cells),
                      "total_cost": s.total_cost, "metrics": m.to_dict()}
                     for w, s, m in zip(mission.segment_weights, mission.segments,
                                        mission.segment_metrics)],
        "aggregate": mission.aggregate.to_dict(),
        "selected_records": selected,
        "config": norms_config.to_dict(),
    }


def cmd_mission(args) -> int:
    if args.spec is None:
        raise ConfigError("mission needs --spec")
    _require_files(args.spec)
    spec = load_mission_spec(args.spec)
    _require_files(spec.dem, spec.rock, spec.science, spec.banned, spec.cost_config)
    config = load_cost_config(spec.cost_config)
    stack = load_stack(spec.dem, spec.rock, spec.science, spec.banned,
                       max_slope=config.max_slope, max_rock=config.max_rock)
    waypoints = spec.waypoints or [stack.geometry.world_to_cell(x, y) for x, y in spec.waypoints_world]
    map_id = compute_map_id(stack, config, args.fixed_time)
    workers = resolve_workers(args.workers)
    timings = {}
    selected = None
    if spec.weights is not None:
        weights = spec.weights
    else:
        grid = build_weight_grid(spec.steps, spec.epsilon)
        dbs = []
        for a, b in zip(waypoints, waypoints[1:]):
            dbs.append(run_sweep(stack, a, b, grid, workers, config, args.fixed_time, timings))
        selected = select_constrained(dbs, spec.energy_bound)
        weights = [db.records[i].weights for db, i in zip(dbs, selected)]
    mission = plan_mission(stack, waypoints, weights, config, args.fixed_time, map_id)
    files = {"mission.json": _dump(_mission_doc(mission, config, selected))}
    lines = [f"segments: {len(mission.segments)}",
             f"length_m={mission.aggregate.length_m!r} energy_rel={mission.aggregate.energy_rel!r} "
             f"risk_total={mission.aggregate.risk_total!r} "
             f"science_total={mission.aggregate.science_total!r}"]
    if spec.baseline is not None:
        base = plan_mission(stack, waypoints, spec.baseline, config, args.fixed_time, map_id)
        lines.append(format_comparison(compare_missions(base, mission), ("baseline", "planned")))
        files["baseline.json"] = _dump(_mission_doc(base, config))
    files["mission_table.txt"] = "\n".join(lines) + "\n"
    files["mission.timing.json"] = _dump(timings)
    _write_outputs(Path(args.out if args.out != "." or spec.output is None else spec.output), files)
    print("\n".join(lines))
    return EXIT_OK


def cmd_bench(args) -> int:
    config = load_cost_config(args.cost_config) if args.cost_config else None
    report = bench_mod.run_bench(args.sizes, args.trials, args.trials, args.seed, config)
    _write_outputs(Path(args.out), {"bench.json": _dump(report)})
    for row in report["sizes"]:
        print(f"{row['size']:>5}^2  init {row['init_seconds'] * 1e3:9.2f} ms  "
              f"search {row['search_seconds'] * 1e3:9.2f} ms  map {row['map_seconds'] * 1e3:9.2f} ms")
    fit = report["fit_ms"]
    print(f"t = {fit['a']:.6f} ms * n_pixel + {fit['b']:.2f} ms   R^2 = {fit['r2']:.4f}   "
          f"{'PASS' if report['pass'] else 'FAIL'}")
    return EXIT_OK


def _load_report(path):
    doc = json.loads(Path(path).read_text())
    return SimpleNamespace(assignments={int(k): v for k, v in doc["assignments"].items()},
                           representatives=doc["representatives"])


def cmd_render(args) -> int:
    stack, _ = _load_world(args)
    if args.db is not None:
        _require_files(args.db, args.clusters)
        db = PathDatabase.read(args.db)
        report = _load_report(args.clusters) if args.clusters else None
        overlays = database_overlays(db, report)
    elif args.path is not None:
        _require_files(args.path)
        doc = json.loads(Path(args.path).read_text())
        overlays = [([tuple(c) for c in doc["cells"]], 0, True)]
    else:
        overlays = []
    _write_outputs(Path(args.out), {"render.ppm": render_ppm(stack, overlays, args.scale),
                                    "render.svg": render_svg(stack, overlays, args.scale)})
    print(f"rendered {len(overlays)} paths")
    return EXIT_OK


def cmd_synth(args) -> int:
    rows, cols = args.size
    params = TerrainParams(rows=rows, cols=cols, cell_size=args.cell_size, roughness=args.roughness,
                           rock_density=args.rock_density, hotspots=args.hotspots, seed=args.seed)
    paths = write_synth(params, args.out)
    for kind, p in paths.items():
        print(f"{kind}: {p}")
    return EXIT_OK


def _size(text: str):
    parts = [int(v) for v in text.lower().replace("x", ",").split(",")]
    return (parts[0], parts[0]) if len(parts) == 1 else (parts[0], parts[1])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mopath", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--map-dem")
    common.add_argument("--map-rock")
    common.add_argument("--map-science")
    common.add_argument("--map-banned")
    common.add_argument("--cost-config")
    common.add_argument("--out", default=".")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--fixed-time", action="store_true",
                        help="use fixed 10 s / 14.1 s edge times instead of length/velocity")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", parents=[common])
    p.add_argument("--start", type=_cell)
    p.add_argument("--goal", type=_cell)
    p.add_argument("--weights")
    p.add_argument("--heuristic", choices=("admissible", "zero"), default="admissible")
    p.set_defaults(func=cmd_plan, needs_dem=True)

    p = sub.add_parser("sweep", parents=[common])
    p.add_argument("--start", type=_cell)
    p.add_argument("--goal", type=_cell)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--epsilon", type=float, default=1e-2)
    p.add_argument("--dedupe", action="store_true")
    p.add_argument("--no-corners", action="store_true")
    p.set_defaults(func=cmd_sweep, needs_dem=True)

    p = sub.add_parser("cluster", parents=[common])
    p.add_argument("--db")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--candidates", type=int)
    p.set_defaults(func=cmd_cluster, needs_dem=False)

    p = sub.add_parser("mission", parents=[common])
    p.add_argument("--spec")
    p.set_defaults(func=cmd_mission, needs_dem=False)

    p = sub.add_parser("bench", parents=[common])
    p.add_argument("--sizes", type=_int_list, default=list(bench_mod.DEFAULT_SIZES))
    p.add_argument("--trials", type=int, default=5)
    p.set_defaults(func=cmd_bench, needs_dem=False)

    p = sub.add_parser("render", parents=[common])
    p.add_argument("--db")
    p.add_argument("--clusters")
    p.add_argument("--path")
    p.add_argument("--scale", type=int, default=4)
    p.set_defaults(func=cmd_render, needs_dem=True)

    p = sub.add_parser("synth", parents=[common])
    p.add_argument("--size", type=_size, default=(64, 64))
    p.add_argument("--cell-size", type=float, default=5.0)
    p.add_argument("--roughness", type=float, default=0.15)
    p.add_argument("--rock-density", type=float, default=0.3)
    p.add_argument("--hotspots", type=int, default=3)
    p.set_defaults(func=cmd_synth, needs_dem=False)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.needs_dem and not args.map_dem:
            raise ConfigError(f"{args.command} needs --map-dem")
        return args.func(args)
    except ConstraintInfeasibleError as exc:
        print(f"constraint infeasible: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, MapError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PlannerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
