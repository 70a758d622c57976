import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", max_examples=300, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def brute_knn(coords, k):
    """Second, loop-based reference scan (ties by lower index)."""
    n = len(coords)
    out_i, out_d = [], []
    for q in range(n):
        cands = []
        for j in range(n):
            if j != q:
                d2 = sum((float(coords[q][a]) - float(coords[j][a])) ** 2 for a in range(3))
                cands.append((d2, j))
        cands.sort()
        out_i.append([j for _, j in cands[:k]])
        out_d.append([d2 ** 0.5 for d2, _ in cands[:k]])
    return np.array(out_i), np.array(out_d)
