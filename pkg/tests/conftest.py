import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from particle_forge import Graph


def random_graph(rng: np.random.Generator, n: int, p: float) -> Graph:
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return Graph.from_edges(n, edges)


def random_connected_graph(rng: np.random.Generator, n: int, p: float) -> Graph:
    while True:
        g = random_graph(rng, n, p)
        if n <= 1 or is_connected(g):
            return g


def is_connected(g: Graph) -> bool:
    seen, stack = {0}, [0]
    while stack:
        v = stack.pop()
        for w in g.adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == g.n


def distance_matrix(g: Graph) -> np.ndarray:
    """Floyd-Warshall; unreachable pairs are inf."""
    d = np.full((g.n, g.n), np.inf)
    np.fill_diagonal(d, 0)
    for u, v in g.edges():
        d[u, v] = d[v, u] = 1
    for k in range(g.n):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return d


@st.composite
def graphs(draw, min_n=1, max_n=7):
    n = draw(st.integers(min_n, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph.from_edges(n, [e for e, m in zip(pairs, mask) if m])


# -- acceptance summary ---------------------------------------------------

_CRITERIA: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for key, value in report.user_properties:
        if key == "criterion":
            _CRITERIA[value] = ("PASS" if report.passed else "FAIL", report.nodeid)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda s: int(s.split()[0])):
        status, _ = _CRITERIA[name]
        terminalreporter.write_line(f"criterion {name}: {status}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
