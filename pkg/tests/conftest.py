import math
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mifbound.clark import ClarkMeasure
from mifbound.mif import clark_model

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def single_atom():
    return clark_model(ClarkMeasure([0.0], [math.pi]))


@pytest.fixture
def two_atoms():
    return clark_model(ClarkMeasure([-1.0, 1.0], [1.0, 1.0]))


def random_measure(rng, n_max=50, min_sep=0.5):
    n = int(rng.integers(1, n_max + 1))
    a = np.cumsum(rng.uniform(min_sep, 3.0, n))
    a -= a.mean()
    w = rng.uniform(0.1, 10.0, n)
    return ClarkMeasure(a, w)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
