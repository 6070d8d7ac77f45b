import numpy as np
import pytest

from pgw import PgwProblem, build_mm_space

ACCEPTANCE_LINES = []


def random_space(rng, n, dim=2, scale=1.0, uniform=False):
    pts = scale * rng.random((n, dim))
    w = np.full(n, 1.0 / n) if uniform else rng.uniform(0.1, 1.0, n) / n
    return build_mm_space(pts, w)


def random_problem(rng, n, m, lam=None, scale=1.0):
    if lam is None:
        lam = float(rng.choice([0.05, 0.2, 1.0, 10.0]))
    x = random_space(rng, n, int(rng.integers(1, 4)), scale)
    y = random_space(rng, m, int(rng.integers(1, 4)), scale)
    return PgwProblem(x, y, lam)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
