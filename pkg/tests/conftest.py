import numpy as np
import pytest
from hypothesis import settings

from graphon_aug.graph import Graph

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def random_graph(rng, n, p=0.4, gid="g", label=None):
    upper = np.triu(rng.random((n, n)) < p, k=1)
    iu, ju = np.nonzero(upper)
    return Graph(gid, n, tuple(zip(iu.tolist(), ju.tolist())), label)


def random_symmetric(rng, n):
    w = rng.random((n, n))
    return np.triu(w) + np.triu(w, 1).T


def path_graph(n, gid="path"):
    return Graph(gid, n, tuple((i, i + 1) for i in range(n - 1)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
