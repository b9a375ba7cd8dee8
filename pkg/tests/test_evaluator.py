import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mopath.cost_model import CostWeights, compute_norms, crash_rate_raw, risk_cost
from mopath.evaluator import (
    compose_risk,
    compose_risk_product,
    evaluate,
    invert_crash_rate,
    relative_energy_scaling,
    traversal_times,
)
from mopath.planner import PlanRequest, plan
from mopath.raster_map import GridGeometry, stack_from_arrays

from conftest import random_map


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 0.2), max_size=200))
def test_risk_forms_agree(ps):
    assert compose_risk(ps) == pytest.approx(compose_risk_product(ps), abs=1e-12)


def test_risk_edge_cases():
    assert compose_risk([]) == 0.0
    assert compose_risk([0.0, 0.0]) == 0.0
    assert math.copysign(1, compose_risk([0.0])) == 1
    assert compose_risk([1.0, 0.1]) == 1.0
    assert compose_risk([0.5, 0.5]) == 0.75


def test_risk_monotone_in_edges():
    ps = np.random.default_rng(0).uniform(0, 0.01, 50)
    totals = [compose_risk(ps[:k]) for k in range(51)]
    assert all(b >= a for a, b in zip(totals, totals[1:]))


def test_traversal_times():
    g = GridGeometry(3, 3, 8.0)
    lengths = [8.0, 8.0 * math.sqrt(2)]
    assert traversal_times(lengths, g, 0.8) == pytest.approx([10.0, 10 * math.sqrt(2)])
    assert traversal_times(lengths, g, 0.8, literal_time=True) == [10.0, 10 * math.sqrt(2)]
    g5 = GridGeometry(3, 3, 5.0)
    assert traversal_times([5.0], g5, 0.8) == [6.25]
    assert traversal_times([5.0], g5, 0.8, literal_time=True) == [10.0]


def test_flat_path_metrics():
    science = np.full((4, 6), 0.25)
    s = stack_from_arrays(np.zeros((4, 6)), 8.0, science=science)
    w = CostWeights(1, 0, 0)
    n = compute_norms(s, w)
    path = plan(s, PlanRequest((1, 0), (1, 5), w), n)
    m = evaluate(path, n, s.geometry)
    assert m.length_m == 40.0
    assert m.energy_rel == pytest.approx(5 * 803.0 * 10.0, rel=1e-12)
    assert m.risk_total == 0.0
    assert m.science_total == pytest.approx(0.25, abs=1e-12)


def test_science_total_is_mean_interest():
    s = random_map(9)
    w = CostWeights(0.2, 0.2, 0.6)
    n = compute_norms(s, w)
    free = np.argwhere(~s.banned)
    path = plan(s, PlanRequest(tuple(free[0]), tuple(free[-1]), w), n)
    m = evaluate(path, n, s.geometry)
    assert m.science_total == pytest.approx(np.mean([s.science[c] for c in path.cells]), abs=1e-12)


def test_inversion_roundtrip():
    s = random_map(6)
    n = compute_norms(s, CostWeights(0, 1, 0))
    rng = np.random.default_rng(1)
    for _ in range(200):
        slope = rng.uniform(-n.slope_bound, n.slope_bound)
        rock = rng.uniform(*n.rock_range)
        d = rng.choice([n.cell_size, n.cell_size * math.sqrt(2)])
        raw = float(crash_rate_raw(slope, rock, n.crash_coeffs))
        back = float(invert_crash_rate(risk_cost(slope, rock, d, n), d, n))
        assert back == pytest.approx(raw, abs=1e-9)


def test_relative_energy_scaling():
    s = stack_from_arrays(np.zeros((4, 6)), 8.0)
    w = CostWeights(1, 0, 0)
    n = compute_norms(s, w)
    m1 = evaluate(plan(s, PlanRequest((0, 0), (0, 2), w), n), n, s.geometry)
    m2 = evaluate(plan(s, PlanRequest((0, 0), (0, 4), w), n), n, s.geometry)
    assert relative_energy_scaling([m1, m2], 0) == pytest.approx([100.0, 200.0])
