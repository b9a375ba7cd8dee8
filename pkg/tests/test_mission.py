import math

import numpy as np
import pytest

from mopath.cost_model import CostWeights
from mopath.errors import ConfigError, ConfigMismatchError, ConstraintInfeasibleError
from mopath.evaluator import PathMetrics
from mopath.mission import (
    compare_missions,
    concatenate,
    format_comparison,
    format_delta,
    load_mission_spec,
    plan_mission,
    select_constrained,
)
from mopath.raster_map import stack_from_arrays
from mopath.sweep import PathRecord

from oracles import lexicographic_winner


def rec(idx, energy, risk, science, ok=True):
    w = CostWeights(1, 0, 0)
    if not ok:
        return PathRecord(idx, w, "no_path")
    return PathRecord(idx, w, "ok", [(0, 0)], 0.0,
                      PathMetrics(1.0, energy, risk, science, (0.0, 0.0, 0.0)))


HAND_DB = [
    rec(0, 100.0, 0.30, 0.5),
    rec(1, 200.0, 0.10, 0.2),
    rec(2, 200.0, 0.10, 0.6),
    rec(3, 300.0, 0.05, 0.1),
    rec(4, 300.0, 0.05, 0.1),
    rec(5, 50.0, 0.90, 0.9),
    rec(6, 0.0, 0.0, 0.0, ok=False),
]


@pytest.mark.parametrize("bound, expected", [(math.inf, 3), (250.0, 2), (150.0, 0), (50.0, 5)])
def test_select_constrained(bound, expected):
    assert select_constrained([HAND_DB], bound) == [expected]
    assert lexicographic_winner(HAND_DB, bound) == [expected]


def test_select_infeasible():
    with pytest.raises(ConstraintInfeasibleError):
        select_constrained([HAND_DB], 10.0)
    with pytest.raises(ConstraintInfeasibleError):
        select_constrained([[rec(0, 0, 0, 0, ok=False)]])
    with pytest.raises(ConfigError):
        select_constrained([HAND_DB, HAND_DB], [1.0])


def test_select_per_segment_bounds():
    assert select_constrained([HAND_DB, HAND_DB], [math.inf, 150.0]) == [3, 0]


def _stack():
    science = np.zeros((6, 16))
    science[0, :] = 1.0
    return stack_from_arrays(np.zeros((6, 16)), 8.0, science=science)


def test_mission_concatenation():
    s = _stack()
    m = plan_mission(s, [(4, 0), (4, 4), (4, 7)], [CostWeights(1, 0, 0)])
    assert m.cells[0] == (4, 0) and m.cells[-1] == (4, 7)
    assert m.cells.count((4, 4)) == 1
    assert len(m.cells) == 8
    whole = concatenate(m.segments)
    assert whole.cells == m.cells
    assert m.aggregate.length_m == pytest.approx(sum(x.length_m for x in m.segment_metrics))
    assert m.aggregate.energy_rel == pytest.approx(sum(x.energy_rel for x in m.segment_metrics))
    with pytest.raises(ValueError):
        concatenate([m.segments[1], m.segments[0]])


def test_mission_validation():
    s = _stack()
    with pytest.raises(ConfigError):
        plan_mission(s, [(0, 0)], [CostWeights(1, 0, 0)])
    with pytest.raises(ConfigError):
        plan_mission(s, [(0, 0), (1, 1), (2, 2)], [CostWeights(1, 0, 0)] * 3)


def test_compare_missions():
    s = _stack()
    a = plan_mission(s, [(4, 0), (4, 15)], [CostWeights(1, 0, 0)], map_id="m")
    b = plan_mission(s, [(4, 0), (4, 15)], [CostWeights(0.05, 0, 0.95)], map_id="m")
    rows = {r["metric"]: r for r in compare_missions(a, b)}
    assert rows["Science"]["delta_pct"] > 0 and rows["Length"]["delta_pct"] > 0
    assert "Science" in format_comparison(list(rows.values()))
    with pytest.raises(ConfigMismatchError):
        compare_missions(a, plan_mission(s, [(4, 0), (4, 7)], [CostWeights(1, 0, 0)], map_id="x"))
    assert format_delta(math.inf) == "+inf%" and format_delta(-12.34) == "-12.3%"


def test_load_mission_spec(tmp_path):
    p = tmp_path / "m.ini"
    p.write_text("[maps]\ndem = d.asc\n[mission]\nwaypoints = 1,2; 3,4\n"
                 "[constraints]\nenergy_bound = 5, inf\nsteps = 3\n")
    spec = load_mission_spec(p)
    assert spec.dem == (tmp_path / "d.asc").resolve()
    assert spec.waypoints == [(1, 2), (3, 4)] and spec.energy_bound == [5.0, math.inf]
    p.write_text("[maps]\ndem = d.asc\n[mission]\nwaypoints = 1,2; 3,4\n")
    with pytest.raises(ConfigError):
        load_mission_spec(p)
    p.write_text("[mission]\nwaypoints = 1,2\n")
    with pytest.raises(ConfigError):
        load_mission_spec(p)
