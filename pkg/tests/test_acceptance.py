"""Acceptance suite: one test per criterion, each reported as a PASS/FAIL line."""

import contextlib
import math
import tempfile
import time

import numpy as np
import pytest

from mopath import bench
from mopath.cli import main
from mopath.cluster import kmeans_pp
from mopath.cost_model import (
    CostConfig,
    CostWeights,
    compute_norms,
    crash_rate_raw,
    energy_raw,
    risk_cost,
    scale_crash_rate,
)
from mopath.errors import ConstraintInfeasibleError
from mopath.evaluator import compose_risk, compose_risk_product, evaluate, invert_crash_rate
from mopath.mission import select_constrained
from mopath.planner import ADMISSIBLE, ZERO, CostField, PlanRequest, plan, search
from mopath.raster_map import load_stack
from mopath.sweep import build_weight_grid, run_sweep
from mopath.synth import TerrainParams, synth_stack

import conftest
from cli_runs import GOLDEN, MAP_ARGS, SCENARIO, collect, run_all
from conftest import random_map, random_weights
from oracles import brute_domain, brute_extrema, lexicographic_winner, reverse_dijkstra
from test_cluster import blobs, permuted_accuracy
from test_mission import HAND_DB, rec


@contextlib.contextmanager
def criterion(n, title):
    detail = {}
    t0 = time.perf_counter()
    try:
        yield detail
    except BaseException:
        detail.setdefault("time", f"{time.perf_counter() - t0:.1f}s")
        conftest.ACCEPTANCE[n] = (False, title, _fmt(detail))
        raise
    detail["time"] = f"{time.perf_counter() - t0:.1f}s"
    conftest.ACCEPTANCE[n] = (True, title, _fmt(detail))


def _fmt(detail):
    return ", ".join(f"{k}={v}" for k, v in detail.items())


N_MAPS, N_PAIRS, N_WEIGHTS = 50, 5, 5


def _reachable_pairs(stack, field_, rng, n):
    free = np.argwhere(~stack.banned)
    pairs, tries = [], 0
    while len(pairs) < n:
        tries += 1
        assert tries < 500, "could not find reachable endpoint pairs"
        a, b = (tuple(int(v) for v in free[rng.integers(len(free))]) for _ in range(2))
        if math.hypot(a[0] - b[0], a[1] - b[1]) < 8:
            continue
        if reverse_dijkstra(field_, b)[field_.index(a)] < math.inf:
            pairs.append((a, b))
    return pairs


@pytest.fixture(scope="module")
def corpus():
    """50 seeded 32x32 maps, each with 5 reachable endpoint pairs and 5 weight triples."""
    out = []
    for seed in range(N_MAPS):
        stack = random_map(seed)
        rng = np.random.default_rng(1000 + seed)
        weights = random_weights(rng, N_WEIGHTS)
        fields = []
        for w in weights:
            norms = compute_norms(stack, w)
            fields.append((w, norms, CostField(stack, w, norms)))
        pairs = _reachable_pairs(stack, fields[0][2], rng, N_PAIRS)
        out.append((stack, pairs, fields))
    return out


def test_criterion_01_optimality(corpus):
    with criterion(1, "A* cost equals Dijkstra, expansions never exceed it") as d:
        t0 = time.perf_counter()
        worst, n, more = 0.0, 0, 0
        for stack, pairs, fields in corpus:
            for a, b in pairs:
                for w, norms, f in fields:
                    pa = plan(stack, PlanRequest(a, b, w, ADMISSIBLE), norms, f)
                    pz = plan(stack, PlanRequest(a, b, w, ZERO), norms, f)
                    worst = max(worst, abs(pa.total_cost - pz.total_cost) / max(pz.total_cost, 1e-300))
                    more += pa.expanded > pz.expanded
                    n += 1
        elapsed = time.perf_counter() - t0
        d.update(instances=n, max_rel_diff=f"{worst:.2e}", astar_expanded_more=more,
                 search_s=f"{elapsed:.1f}")
        assert n >= 50 * 5 * 5
        assert worst <= 1e-9
        assert more == 0
        assert elapsed < 60


def test_criterion_02_heuristic(corpus):
    with criterion(2, "heuristic dominated by true cost-to-go and consistent") as d:
        min_slack, nodes = math.inf, 0
        for stack, pairs, fields in corpus:
            for a, b in pairs:
                for w, norms, f in fields:
                    truth = reverse_dijkstra(f, b)
                    h = f.heuristic_table(b)
                    trace = []
                    search(f, a, b, ADMISSIBLE, trace)
                    for u in trace:
                        min_slack = min(min_slack, truth[u] - h[u])
                    nodes += len(trace)
        worst_edge, edges = math.inf, 0
        for stack, pairs, fields in corpus[:3]:
            for w, norms, f in fields:
                for goal in {b for _, b in pairs}:
                    h = f.heuristic_table(goal)
                    for k, off in enumerate(f.offsets):
                        for u, c in enumerate(f.totals[k]):
                            if c != math.inf:
                                worst_edge = min(worst_edge, c + h[u + off] - h[u])
                                edges += 1
        d.update(expanded_nodes=nodes, min_slack=f"{min_slack:.3e}", edges_checked=edges,
                 min_consistency_slack=f"{worst_edge:.3e}")
        assert min_slack >= -1e-9
        assert worst_edge >= -1e-9


def test_criterion_03_cost_model():
    with criterion(3, "cost-model spot values and closed-form normaliser extrema") as d:
        assert energy_raw(0.0, 0.0, 8.0) == 803.0
        assert abs(energy_raw(10.0, 0.0, 8.0) - 981.9) <= 1e-9
        assert crash_rate_raw(0.0, 0.0) == 0.0
        assert abs(scale_crash_rate(0.5, 16.0) - 0.75) <= 1e-12
        cfg = CostConfig()
        worst = 0.0
        for seed in range(5):
            stack = random_map(500 + seed)
            norms = compute_norms(stack, CostWeights(1 / 3, 1 / 3, 1 / 3), cfg)
            s_max, r_lo, r_hi = brute_domain(stack)
            assert norms.slope_bound == pytest.approx(s_max, rel=1e-12)
            assert norms.rock_range == pytest.approx((r_lo, r_hi), rel=1e-12)
            scale = math.sqrt(2.0) * stack.geometry.cell_size / cfg.d_sim
            e_lo, e_hi = brute_extrema(cfg.energy_coeffs.p, -s_max, s_max, r_lo, r_hi)
            c_lo, c_hi = brute_extrema(cfg.crash_coeffs.p, -s_max, s_max, r_lo, r_hi)
            c_lo, c_hi = (min(max(v, 0.0), 1.0) for v in (c_lo, c_hi))
            d_diag = math.sqrt(2.0) * stack.geometry.cell_size
            pairs = [
                (norms.e_star_max, max(e_hi, 1e-9) * scale),
                (norms.e_star_min, max(e_lo, 1e-9) * scale),
                (norms.r_star_max, float(scale_crash_rate(c_hi, d_diag))),
                (norms.r_star_min, float(scale_crash_rate(c_lo, d_diag))),
            ]
            for closed, brute in pairs:
                rel = 0.0 if closed == brute else abs(closed - brute) / max(abs(closed), abs(brute))
                worst = max(worst, rel)
        d.update(maps=5, max_rel_diff=f"{worst:.2e}")
        assert worst <= 1e-6


def test_criterion_04_evaluation(corpus):
    with criterion(4, "risk composition, crash-rate inversion, science mean") as d:
        rng = np.random.default_rng(4)
        worst_risk = 0.0
        for scale in (1e-6, 1e-5, 1e-4, 1e-3):
            p = rng.uniform(0.0, scale, 10_000)
            worst_risk = max(worst_risk, abs(compose_risk(p) - compose_risk_product(p)))
        stack = random_map(77)
        norms = compute_norms(stack, CostWeights(0, 1, 0))
        worst_inv = 0.0
        for _ in range(1000):
            s = rng.uniform(-norms.slope_bound, norms.slope_bound)
            r = rng.uniform(*norms.rock_range)
            dist = rng.uniform(0.5, 2.0) * norms.cell_size
            raw = float(crash_rate_raw(s, r))
            back = float(invert_crash_rate(risk_cost(s, r, dist, norms), dist, norms))
            worst_inv = max(worst_inv, abs(back - raw))
        worst_sci, paths = 0.0, 0
        for stack, pairs, fields in corpus[:10]:
            w, norms, f = fields[0]
            for a, b in pairs:
                path = plan(stack, PlanRequest(a, b, w), norms, f)
                m = evaluate(path, norms, stack.geometry)
                mean = math.fsum(stack.science[c] for c in path.cells) / len(path.cells)
                worst_sci = max(worst_sci, abs(m.science_total - mean))
                paths += 1
        d.update(risk_diff=f"{worst_risk:.2e}", inversion_err=f"{worst_inv:.2e}",
                 science_err=f"{worst_sci:.2e}", science_paths=paths)
        assert worst_risk <= 1e-12
        assert worst_inv <= 1e-9
        assert worst_sci <= 1e-12


def test_criterion_05_sweep():
    with criterion(5, "1000 + 3 weight triples, corner dominance") as d:
        grid = build_weight_grid(10)
        assert len(grid.triples) == 1003
        assert [w.as_tuple() for w in grid.triples[1000:]] == [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
        assert max(abs(math.fsum(w.as_tuple()) - 1.0) for w in grid.triples) <= 1e-12
        violations, records = 0, 0
        for seed in range(10):
            stack = synth_stack(TerrainParams(rows=20, cols=20, roughness=0.25, rock_density=0.5,
                                              hotspots=2, seed=900 + seed))
            rng = np.random.default_rng(seed)
            free = np.argwhere(~stack.banned)
            while True:
                a, b = (tuple(int(v) for v in free[rng.integers(len(free))]) for _ in range(2))
                if math.hypot(a[0] - b[0], a[1] - b[1]) < 10:
                    continue
                probe = CostField(stack, CostWeights(1, 0, 0),
                                  compute_norms(stack, CostWeights(1, 0, 0)))
                if reverse_dijkstra(probe, b)[probe.index(a)] < math.inf:
                    break
            db = run_sweep(stack, a, b, grid)
            ok = db.successful()
            records += len(ok)
            for axis in range(3):
                corner = db.records[1000 + axis]
                best = min(r.costs[axis] for r in ok)
                if corner.costs[axis] > best * (1 + 1e-9) + 1e-15:
                    violations += 1
        d.update(triples=len(grid.triples), scenarios=10, records=records,
                 violations=violations)
        assert violations == 0


def test_criterion_06_clustering():
    with criterion(6, "k-means++ blob recovery, monotone SSE, worker invariance") as d:
        pts, truth = blobs()
        assert len(pts) == 1000
        rep = kmeans_pp(pts, 4, seed=0)
        acc = permuted_accuracy(rep.labels, truth, 4)
        runs, bad = 0, 0
        for seed in range(10):
            for k in (2, 4, 7):
                for spread in (0.05, 0.5):
                    p, _ = blobs(spread=spread, seed=seed)
                    h = kmeans_pp(p, k, seed=seed).sse_history
                    bad += any(b > a for a, b in zip(h, h[1:]))
                    runs += 1
        same = all(kmeans_pp(blobs(spread=sp)[0], 4, seed=0, workers=1).to_json()
                   == kmeans_pp(blobs(spread=sp)[0], 4, seed=0, workers=8).to_json()
                   for sp in (0.05, 0.5))
        d.update(accuracy=f"{acc:.4f}", sse_runs=runs, sse_increases=bad, workers_identical=same)
        assert acc >= 0.99
        assert bad == 0
        assert same


def test_criterion_07_determinism(tmp_path):
    with criterion(7, "byte-identical plan/sweep/cluster/mission outputs") as d:
        outs = {}
        for label, workers in (("run1", 1), ("run2", 1), ("workers4", 4)):
            codes = run_all(tmp_path / label, workers)
            assert not any(codes.values()), codes
            outs[label] = collect(tmp_path / label)
        golden = {key: (GOLDEN / key[0] / key[1]).read_bytes() for key in outs["run1"]}
        diffs = [f"{cmd}/{name}" for (cmd, name), data in outs["run1"].items()
                 if data != golden[(cmd, name)]]
        d.update(files=len(golden), repeat_identical=outs["run1"] == outs["run2"],
                 workers_identical=outs["run1"] == outs["workers4"], golden_diffs=len(diffs))
        assert outs["run1"] == outs["run2"]
        assert outs["run1"] == outs["workers4"]
        assert not diffs, diffs


@pytest.mark.slow
def test_criterion_08_runtime_linearity():
    with criterion(8, "plan time linear in pixel count") as d:
        t0 = time.perf_counter()
        report = bench.run_bench((64, 128, 256, 512), trials=5, n_weights=5, seed=0)
        elapsed = time.perf_counter() - t0
        fit = report["fit_ms"]
        d.update(a_ms_per_pixel=f"{fit['a']:.5f}", reference=report["reference_ms_per_pixel"],
                 r2=f"{fit['r2']:.4f}", bench_s=f"{elapsed:.0f}")
        assert fit["r2"] >= 0.9
        assert elapsed < 600


def test_criterion_09_constraints():
    with criterion(9, "constrained selection matches exhaustive lexicographic scan") as d:
        db2 = [rec(0, 10.0, 0.2, 0.3), rec(1, 20.0, 0.2, 0.3), rec(2, 5.0, 0.4, 0.9),
               rec(3, 30.0, 0.01, 0.0), rec(4, 0.0, 0.0, 0.0, ok=False)]
        settings_ = [(math.inf, math.inf), (250.0, 25.0), (150.0, 15.0), (100.0, 5.0),
                     (50.0, 30.0)]
        checked = 0
        for b1, b2 in settings_:
            got = select_constrained([HAND_DB, db2], [b1, b2])
            want = [lexicographic_winner(HAND_DB, b1), lexicographic_winner(db2, b2)]
            assert all(len(w) == 1 for w in want)
            assert got == [w[0] for w in want]
            checked += 1
        with pytest.raises(ConstraintInfeasibleError):
            select_constrained([HAND_DB, db2], [40.0, 30.0])
        stack = load_stack(SCENARIO / "dem.asc", SCENARIO / "rock.asc", SCENARIO / "science.asc",
                           SCENARIO / "banned.asc")
        dbs = [run_sweep(stack, (60, 4), (3, 39), build_weight_grid(3)),
               run_sweep(stack, (3, 39), (58, 58), build_weight_grid(3))]
        for bound in (math.inf, 4.6e5):
            got = select_constrained(dbs, bound)
            assert got == [lexicographic_winner(db.records, bound)[0] for db in dbs]
            checked += 1
        d.update(settings_checked=checked, infeasible_raises=True)


def test_criterion_10_table_structure(capsys):
    with criterion(10, "corner-weight Total equals the active component") as d:
        mismatches = []
        for weights, row in (("1,0,0", "Energy"), ("0,1,0", "Risk"), ("0,0,1", "Scientific")):
            with tempfile.TemporaryDirectory() as tmp:
                assert main(["plan", *MAP_ARGS, "--start", "60,4", "--goal", "3,39",
                             "--weights", weights, "--out", tmp]) == 0
            text = capsys.readouterr().out
            values = {ln.split()[0]: ln.split()[-1] for ln in text.splitlines() if ln.strip()}
            if values["Total"] != values[row] or float(values["Total"]) != float(values[row]):
                mismatches.append((weights, values["Total"], values[row]))
        d.update(corners=3, mismatches=len(mismatches))
        assert not mismatches, mismatches
