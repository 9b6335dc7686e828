import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from pldmatch.graph import from_edges

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def small_graphs(draw, max_n=20, min_n=1):
    n = draw(st.integers(min_n, max_n))
    p = draw(st.floats(0.0, 0.6))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    return from_edges(n, np.column_stack([iu[keep], ju[keep]]))


def random_graph(n, p, rng):
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    return from_edges(n, np.column_stack([iu[keep], ju[keep]]))


def floyd_warshall(g):
    n = g.vertex_count
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0)
    for u, v in g.edges().tolist():
        dist[u, v] = dist[v, u] = 1
    for k in range(n):
        dist = np.minimum(dist, dist[:, [k]] + dist[[k], :])
    return dist


@pytest.fixture
def path3():
    return from_edges(3, [(0, 1), (1, 2)])


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
