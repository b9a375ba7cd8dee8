import math
from pathlib import Path

import numpy as np
import pytest

from mopath.cost_model import CostWeights
from mopath.raster_map import stack_from_arrays
from mopath.synth import TerrainParams, synth_stack

ROOT = Path(__file__).resolve().parents[1]
SCENARIO = ROOT / "scenarios" / "mission64"


def random_map(seed, size=32):
    """Seeded 32x32 corpus map: moderately rough with rock patches and some bans."""
    return synth_stack(TerrainParams(rows=size, cols=size, cell_size=5.0, roughness=0.25,
                                     rock_density=0.5, hotspots=2, seed=seed))


def random_weights(rng, n):
    out = []
    for _ in range(n):
        a = rng.dirichlet((1.0, 1.0, 1.0))
        out.append(CostWeights.normalized(*a))
    return out


def free_pairs(stack, rng, n, min_sep=8):
    free = np.argwhere(~stack.banned)
    pairs = []
    while len(pairs) < n:
        a, b = free[rng.integers(len(free))], free[rng.integers(len(free))]
        if math.hypot(*(a - b)) >= min_sep:
            pairs.append(((int(a[0]), int(a[1])), (int(b[0]), int(b[1]))))
    return pairs


@pytest.fixture
def flat_stack():
    return stack_from_arrays(np.zeros((8, 10)), 8.0)


@pytest.fixture
def scenario_dir():
    return SCENARIO


# Acceptance results, printed one line per criterion at the end of the session.
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {title}  [{detail}]")
