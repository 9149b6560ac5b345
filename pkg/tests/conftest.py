import numpy as np
import pytest

_X, _W = np.polynomial.legendre.leggauss(20)


def gl_integral(f, lo, hi, breaks=(), panels=200):
    """Composite Gauss-Legendre integral of a vectorised ``f`` over ``[lo, hi]``."""
    edges = np.unique(np.concatenate([[lo, hi], [b for b in breaks if lo < b < hi]]))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        e = np.linspace(a, b, panels + 1)
        half = 0.5 * np.diff(e)
        mid = 0.5 * (e[1:] + e[:-1])
        nodes = (mid[:, None] + half[:, None] * _X).ravel()
        w = (half[:, None] * _W).ravel()
        total += float(np.sum(np.asarray(f(nodes)) * w))
    return total


@pytest.fixture
def integral():
    return gl_integral


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
