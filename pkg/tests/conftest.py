import numpy as np
import pytest

from trimrank.model import ComparisonDataset

ACCEPTANCE_LINES = []


def make_dataset(n, triples, weights=None):
    """``triples`` of (i, j, y)."""
    triples = list(triples)
    return ComparisonDataset(
        n,
        [t[0] for t in triples],
        [t[1] for t in triples],
        [t[2] for t in triples],
        weights,
    )


@pytest.fixture
def cycle3():
    return make_dataset(3, [(0, 1, 1), (1, 2, 1), (2, 0, 1)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
