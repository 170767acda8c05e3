import numpy as np
import pytest

from rwer.graph import from_edges, row_normalize

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_RESULTS = {}


def random_strong_graph(n, rng, out_degree=3, weighted=True):
    """Random digraph made strongly connected (and aperiodic) by a Hamiltonian ring plus a self-loop."""
    src = np.repeat(np.arange(n), out_degree)
    dst = rng.integers(0, n, size=n * out_degree)
    ring = np.arange(n)
    src = np.concatenate([src, ring, [0]])
    dst = np.concatenate([dst, (ring + 1) % n, [0]])
    w = rng.uniform(0.5, 2.0, size=src.size) if weighted else None
    return from_edges(src, dst, w, n=n)


def two_communities(rng, size=15, p_in=0.3, n_cross=4):
    """Two ring-backed communities of ``size`` nodes with a few cross links; undirected."""
    edges = set()
    for blk in range(2):
        base = blk * size
        for i in range(size):
            edges.add((base + i, base + (i + 1) % size))
            for j in range(i + 1, size):
                if rng.random() < p_in:
                    edges.add((base + i, base + j))
    for _ in range(n_cross):
        edges.add((int(rng.integers(0, size)), int(size + rng.integers(0, size))))
    e = np.array(sorted(edges))
    g = from_edges(np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]], n=2 * size)
    return g, np.repeat([0, 1], size)


@pytest.fixture
def two_cycle():
    return row_normalize(from_edges([0, 1], [1, 0]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
