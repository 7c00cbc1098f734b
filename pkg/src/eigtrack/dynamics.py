"""Generators of evolving-graph streams.

* :func:`scenario1_stream` grows a static graph in degree order.
* :func:`scenario2_stream` replays a timestamped edge list in batches.
* :func:`sbm_dynamic_stream` reveals a planted-partition graph node by node.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
import scipy.sparse as sp

from .graph import (
    DynamicGraphStream,
    SymSparseMatrix,
    assemble_update,
    degrees,
    split_difference,
)


@dataclass
class TimestampedEdgeList:
    """Edges ``(u, v, t)`` in source node ids; sorted stably by ``t`` on construction."""

    edges: np.ndarray
    node_ids: np.ndarray | None = None

    def __post_init__(self):
        e = np.asarray(self.edges)
        if e.size == 0:
            e = np.zeros((0, 3))
        if e.ndim != 2 or e.shape[1] != 3:
            raise ValueError("edges must be an (M, 3) array of (u, v, t)")
        e = e[e[:, 0] != e[:, 1]]
        self.edges = e[np.argsort(e[:, 2], kind="stable")]

    def __len__(self) -> int:
        return self.edges.shape[0]


@dataclass(frozen=True)
class SbmConfig:
    n: int = 10_000
    k_clusters: int = 5
    p_in: float = 0.05
    p_out: float = 0.001
    n0: int = 9_500
    t_steps: int = 10
    s_per_step: int = 50
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.p_out < self.p_in <= 1:
            raise ValueError("need 0 <= p_out < p_in <= 1")
        if self.k_clusters < 1 or self.n < 1:
            raise ValueError("need n >= 1 and k_clusters >= 1")
        if self.n0 < 1 or self.t_steps < 0 or self.s_per_step < 0:
            raise ValueError("need n0 >= 1, t_steps >= 0, s_per_step >= 0")
        if self.n0 + self.t_steps * self.s_per_step > self.n:
            raise ValueError("n0 + t_steps * s_per_step exceeds n")

    def to_dict(self) -> dict:
        return asdict(self)


def _batch_sizes(total: int, t_steps: int) -> list[int]:
    base = total // t_steps
    sizes = [base] * t_steps
    sizes[-1] += total - base * t_steps
    return sizes


def expansion_stream(a: SymSparseMatrix, sizes, node_ids=None, labels=None, meta=None) -> DynamicGraphStream:
    """Reveal ``a`` as a sequence of growing leading principal submatrices.

    ``sizes`` lists the node count at every time step (nondecreasing).
    """
    csr = a.csr
    sizes = [int(s) for s in sizes]
    if any(b < s for s, b in zip(sizes, sizes[1:])) or sizes[-1] > a.n:
        raise ValueError("sizes must be nondecreasing and at most a.n")
    subs = [SymSparseMatrix(csr[:s, :s], check=False) for s in sizes]
    updates = [split_difference(subs[t + 1], subs[t]) for t in range(len(sizes) - 1)]
    lab = None if labels is None else [np.asarray(labels)[:s].copy() for s in sizes]
    return DynamicGraphStream(subs[0], updates, lab, node_ids, dict(meta or {}))


def permute(a: SymSparseMatrix, order) -> SymSparseMatrix:
    """Symmetric permutation: entry ``(i, j)`` of the result is ``a[order[i], order[j]]``."""
    order = np.asarray(order)
    return SymSparseMatrix(a.csr[order][:, order], check=False)


def scenario1_stream(g: SymSparseMatrix, t_steps: int) -> DynamicGraphStream:
    """Grow ``g`` from its ``floor(N/2)`` highest-degree nodes.

    Each step adds the next ``floor((N - N0) / T)`` nodes by degree (ties by
    ascending node id) with all their edges to nodes already present; the
    remainder of the floor division joins the last step.
    """
    if t_steps < 1:
        raise ValueError("t_steps must be >= 1")
    n = g.n
    n0 = n // 2
    if t_steps > n - n0:
        raise ValueError(f"t_steps={t_steps} exceeds the {n - n0} nodes left to add")
    deg = degrees(g)
    order = np.lexsort((np.arange(n), -deg))
    sizes = np.cumsum([n0] + _batch_sizes(n - n0, t_steps))
    meta = {"scenario": "static-split", "n0": n0}
    return expansion_stream(permute(g, order), sizes, node_ids=order, meta=meta)


def scenario2_stream(edges: TimestampedEdgeList, t_steps: int, m0: int | None = None) -> DynamicGraphStream:
    """Replay timestamped edges: the first ``m0`` form the initial graph, the rest arrive in ``T`` batches.

    Nodes are numbered by first appearance in time order, so the nodes that
    a batch introduces always occupy the trailing indices. Repeated edges
    are ignored.
    """
    if t_steps < 1:
        raise ValueError("t_steps must be >= 1")
    e = edges.edges
    m = e.shape[0]
    m0 = m // 2 if m0 is None else int(m0)
    if not 0 <= m0 <= m:
        raise ValueError(f"m0={m0} outside [0, {m}]")
    raw = e[:, :2].astype(np.int64)
    ids, first = np.unique(raw.ravel(), return_index=True)
    node_ids = ids[np.argsort(first, kind="stable")]
    remap = np.empty(ids.shape[0], dtype=np.int64)
    remap[np.argsort(first, kind="stable")] = np.arange(ids.shape[0])
    uv = remap[np.searchsorted(ids, raw)]

    bounds = np.cumsum([m0] + _batch_sizes(m - m0, t_steps))
    seen: set[tuple[int, int]] = set()
    dropped = 0

    def fresh(lo, hi):
        nonlocal dropped
        out = []
        for u, v in uv[lo:hi]:
            k = (min(u, v), max(u, v))
            if k in seen:
                dropped += 1
                continue
            seen.add(k)
            out.append(k)
        return out

    def n_nodes(hi):
        return int(uv[:hi].max()) + 1 if hi > 0 else 0

    initial = SymSparseMatrix.from_edges(n_nodes(m0), fresh(0, m0))
    updates = []
    n_prev = initial.n
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        n_cur = max(n_prev, n_nodes(hi))
        batch = fresh(lo, hi)
        old = [k for k in batch if k[1] < n_prev]
        new = [k for k in batch if k[1] >= n_prev]
        updates.append(assemble_update(n_prev, old, (), n_cur - n_prev, new))
        n_prev = n_cur
    meta = {"scenario": "timestamped", "m0": m0, "duplicate_edges": dropped}
    return DynamicGraphStream(initial, updates, None, node_ids, meta)


def _decode_upper(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Invert ``k = c (c - 1) / 2 + r`` for ``0 <= r < c``."""
    c = np.floor((1 + np.sqrt(1 + 8 * k.astype(np.float64))) / 2).astype(np.int64)
    c -= c * (c - 1) // 2 > k
    c += (c + 1) * c // 2 <= k
    return k - c * (c - 1) // 2, c


def sample_sbm(n: int, k_clusters: int, p_in: float, p_out: float, rng) -> tuple[SymSparseMatrix, np.ndarray]:
    """Sample an undirected SBM adjacency and its planted labels.

    Each node picks a cluster uniformly at random. For every block the edge
    count is drawn from its binomial law and that many distinct node pairs
    are chosen uniformly, which is equivalent to independent Bernoulli
    trials per pair.
    """
    labels = rng.integers(k_clusters, size=n)
    members = [np.flatnonzero(labels == c) for c in range(k_clusters)]
    rows, cols = [], []
    for a in range(k_clusters):
        ia = members[a]
        for b in range(a, k_clusters):
            ib = members[b]
            p = p_in if a == b else p_out
            cells = ia.size * (ia.size - 1) // 2 if a == b else ia.size * ib.size
            if p == 0 or cells == 0:
                continue
            m = rng.binomial(cells, p)
            pick = rng.choice(cells, size=m, replace=False)
            if a == b:
                r, c = _decode_upper(pick)
                rows.append(ia[r])
                cols.append(ia[c])
            else:
                rows.append(ia[pick // ib.size])
                cols.append(ib[pick % ib.size])
    r = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    c = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    upper = sp.coo_matrix((np.ones(r.size), (r, c)), shape=(n, n))
    return SymSparseMatrix((upper + upper.T).tocsr(), check=False), labels


def sbm_dynamic_stream(cfg: SbmConfig) -> DynamicGraphStream:
    """Sample one SBM graph and reveal random node subsets of it over time.

    ``V(0)`` is a random ``n0``-subset; each step adds ``s_per_step`` nodes
    drawn at random from those not yet present. Nodes are numbered in
    arrival order (sorted by source id within a batch).
    """
    rng = np.random.default_rng(cfg.seed)
    a, labels = sample_sbm(cfg.n, cfg.k_clusters, cfg.p_in, cfg.p_out, rng)
    perm = rng.permutation(cfg.n)
    bounds = [cfg.n0 + t * cfg.s_per_step for t in range(cfg.t_steps + 1)]
    order = np.concatenate(
        [np.sort(perm[:cfg.n0])]
        + [np.sort(perm[lo:hi]) for lo, hi in zip(bounds[:-1], bounds[1:])]
    ).astype(np.int64)
    meta = {"scenario": "sbm", **cfg.to_dict()}
    return expansion_stream(permute(a, order), bounds, node_ids=order, labels=labels[order], meta=meta)
