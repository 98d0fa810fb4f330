import numpy as np
import pytest
from hypothesis import strategies as st

from topoguide.graph import Graph


def graph_from_bits(n, bits, node_class=None):
    iu = np.triu_indices(n, 1)
    adj = np.zeros((n, n), dtype=np.int64)
    adj[iu] = np.asarray(bits, dtype=np.int64)
    adj = adj + adj.T
    nodes = np.zeros(n, dtype=np.int64) if node_class is None else np.asarray(node_class)
    return Graph.from_matrix(nodes, adj, 2, 2)


@st.composite
def graphs(draw, n_min=1, n_max=8, inactive=False):
    n = draw(st.integers(n_min, n_max))
    m = n * (n - 1) // 2
    bits = draw(st.lists(st.integers(0, 1), min_size=m, max_size=m))
    nodes = None
    if inactive:
        nodes = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    return graph_from_bits(n, bits, nodes)


def random_graph(rng, n, p=0.4):
    bits = (rng.random(n * (n - 1) // 2) < p).astype(int)
    return graph_from_bits(n, bits)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance report ------------------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def criterion(request):
    """Records one PASS/FAIL line for the ``@pytest.mark.criterion(k)`` under test."""
    k = request.node.get_closest_marker("criterion").args[0]

    def report(ok: bool, detail: str) -> bool:
        line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[k] = line
        print(line)
        return ok

    yield report
    ACCEPTANCE_LINES.setdefault(k, f"criterion {k:2d}: FAIL  error before the check ran")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
