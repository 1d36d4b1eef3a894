import numpy as np
import pytest

from latsphere import FiniteProbabilitySpace


def random_space(rng, n):
    w = rng.uniform(0.2, 1.0, n)
    return FiniteProbabilitySpace(w / w.sum())


def random_l1_sphere(rng, space, count, signed=False):
    h = rng.exponential(size=(count, space.n))
    if signed:
        h *= rng.choice([-1.0, 1.0], size=h.shape)
    return h / space.l1(h)[:, None]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def half():
    return FiniteProbabilitySpace([0.5, 0.5])


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
