import random

import pytest
from hypothesis import HealthCheck, settings

from treeamle.repro import random_tree, random_tree_point

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def tree_and_points(seed: int, n_points: int, max_edges: int = 8):
    rng = random.Random(seed)
    T = random_tree(rng, rng.randint(1, max_edges))
    return T, [random_tree_point(rng, T) for _ in range(n_points)]
