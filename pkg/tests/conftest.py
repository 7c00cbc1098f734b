import numpy as np
import pytest
import scipy.sparse as sp

from eigtrack.graph import SymSparseMatrix, GraphUpdate, assemble_update


def random_graph(n, p, rng, weighted=False):
    """Erdos-Renyi adjacency as a SymSparseMatrix."""
    mask = np.triu(rng.random((n, n)) < p, 1)
    w = rng.uniform(0.5, 2.0, (n, n)) if weighted else np.ones((n, n))
    upper = np.where(mask, w, 0.0)
    return SymSparseMatrix(sp.csr_matrix(upper + upper.T))


def random_update(a, rng, n_new=0, n_add=3, n_del=2, p_new=0.2, p_cc=0.3):
    """Random binary update: additions/deletions among old nodes plus ``n_new`` attached nodes."""
    n = a.n
    dense = a.to_dense()
    iu = np.triu_indices(n, 1)
    present = [(i, j) for i, j in zip(*iu) if dense[i, j] != 0]
    absent = [(i, j) for i, j in zip(*iu) if dense[i, j] == 0]
    rng.shuffle(present)
    rng.shuffle(absent)
    added = absent[:n_add]
    removed = present[:n_del]
    new_edges = []
    for s in range(n_new):
        for i in range(n):
            if rng.random() < p_new:
                new_edges.append((i, n + s))
        for s2 in range(s):
            if rng.random() < p_cc:
                new_edges.append((n + s2, n + s))
    return assemble_update(n, added, removed, n_new, new_edges)


def dense_after(a, d):
    n = d.n_total
    out = np.zeros((n, n))
    out[: a.n, : a.n] = a.to_dense()
    return out + d.to_sparse().toarray()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(RESULTS, key=lambda s: int(s.split()[2])):
        terminalreporter.write_line(line)
    if not any(" criterion 12 " in line for line in RESULTS):
        terminalreporter.write_line("[SKIP] criterion 12 Crocodile full protocol: EIGTRACK_CROCODILE not set")
