import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def annulus_points(rng, count, d=2, lo=1.0, hi=2.0):
    """Uniform-radius points in ``lo <= |x| < hi``."""
    v = rng.standard_normal((count, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * rng.uniform(lo, hi, size=(count, 1))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
