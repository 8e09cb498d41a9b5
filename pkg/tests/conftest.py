import itertools

import numpy as np
import pytest


def kron_hadamard(d):
    """Recursive Sylvester construction, independent of the popcount formula."""
    H = np.array([[1]], dtype=np.int64)
    for _ in range(d):
        H = np.block([[H, H], [H, -H]])
    return H


def brute_points(d):
    """All points in index order, built coordinate by coordinate."""
    pts = []
    for i in range(2 ** d):
        pts.append([-1 if (i // 2 ** j) % 2 else 1 for j in range(d)])
    return np.array(pts, dtype=np.float64)


def monomial_value(mask, x):
    out = 1.0
    for j, xj in enumerate(x):
        if mask >> j & 1:
            out *= xj
    return out


def central_difference(fn, theta, h=1e-5):
    g = np.zeros_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        g[i] = (fn(theta + e) - fn(theta - e)) / (2 * h)
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
