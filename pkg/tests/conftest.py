import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(__file__).parent / "data"


def random_scenario(seed, max_nodes=5, horizon=3600.0):
    """Random scripted trajectories packed into a small area so contacts happen."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_nodes + 1))
    side = float(rng.uniform(0.3, 1.0))
    ox, oy = rng.uniform(0, 1 - side, size=2)
    scripts = []
    for _ in range(n):
        legs = int(rng.integers(3, 15))
        scripts.append({
            "start": tuple(rng.uniform(0, side, 2) + (ox, oy)),
            "waypoints": [tuple(p) for p in rng.uniform(0, side, (legs, 2)) + (ox, oy)],
            "waits": list(rng.uniform(30, 600, legs + 1)),
        })
    radius = float(rng.uniform(0.08, 0.25))
    return scripts, radius


@pytest.fixture
def data_dir():
    return DATA


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number])
