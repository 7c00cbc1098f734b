"""Symmetric sparse matrices, structured graph updates and shifted Laplacians.

An update from an ``N``-node graph to an ``N + S``-node graph is stored as
the three blocks of the symmetric perturbation

    [[K,   G],
     [G.T, C]]

that is added to the zero-padded old matrix: ``K`` (``N x N``) holds edge
insertions/deletions among existing nodes, ``G`` (``N x S``) links between
existing and new nodes and ``C`` (``S x S``) links among new nodes.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp


class SpectrumShiftWarning(UserWarning):
    """Raised when a Laplacian shift is too small to keep the spectrum nonnegative."""


def _canonical_csr(mat, shape=None) -> sp.csr_matrix:
    out = sp.csr_matrix(mat, shape=shape, dtype=np.float64, copy=True)
    out.sum_duplicates()
    out.eliminate_zeros()
    out.sort_indices()
    return out


class SymSparseMatrix:
    """Symmetric matrix in compressed sparse row form with both triangles stored.

    Instances are treated as immutable. The CSR arrays are exposed through
    ``row_offsets``, ``col_indices`` and ``values``; column indices are
    strictly increasing within each row and explicit zeros are removed.

    Parameters
    ----------
    mat : array_like or scipy sparse matrix
        Square symmetric matrix.
    check : bool
        Verify structural and numerical symmetry (exact transpose compare).
    """

    __slots__ = ("_csr",)

    def __init__(self, mat, check: bool = True):
        csr = _canonical_csr(mat)
        if csr.shape[0] != csr.shape[1]:
            raise ValueError(f"matrix must be square, got shape {csr.shape}")
        self._csr = csr
        if check and not self.is_symmetric():
            raise ValueError("matrix is not symmetric")

    @classmethod
    def zeros(cls, n: int) -> "SymSparseMatrix":
        return cls(sp.csr_matrix((n, n)), check=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence], weights=None) -> "SymSparseMatrix":
        """Build a symmetric matrix from undirected ``(i, j)`` or ``(i, j, w)`` edges."""
        rows, cols, vals = [], [], []
        for k, e in enumerate(edges):
            i, j = int(e[0]), int(e[1])
            if weights is not None:
                w = float(weights[k])
            else:
                w = float(e[2]) if len(e) > 2 else 1.0
            rows.append(i)
            cols.append(j)
            vals.append(w)
            if i != j:
                rows.append(j)
                cols.append(i)
                vals.append(w)
        coo = sp.coo_matrix((vals, (rows, cols)), shape=(n, n))
        return cls(coo, check=False)

    @property
    def csr(self) -> sp.csr_matrix:
        return self._csr

    @property
    def n(self) -> int:
        return self._csr.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self._csr.shape

    @property
    def nnz(self) -> int:
        return self._csr.nnz

    @property
    def row_offsets(self) -> np.ndarray:
        return self._csr.indptr

    @property
    def col_indices(self) -> np.ndarray:
        return self._csr.indices

    @property
    def values(self) -> np.ndarray:
        return self._csr.data

    def is_symmetric(self) -> bool:
        diff = self._csr - self._csr.T
        return diff.count_nonzero() == 0

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def frobenius_norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))

    def upper_edges(self) -> np.ndarray:
        """Return ``(m, 3)`` array of ``(i, j, w)`` with ``i < j``."""
        coo = sp.triu(self._csr, k=1).tocoo()
        return np.column_stack([coo.row, coo.col, coo.data])

    def __matmul__(self, other):
        return self._csr @ other

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymSparseMatrix):
            return NotImplemented
        if self.shape != other.shape:
            return False
        return (self._csr != other._csr).nnz == 0

    def __repr__(self) -> str:
        return f"SymSparseMatrix(n={self.n}, nnz={self.nnz})"


def matvec(a: SymSparseMatrix, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != a.n:
        raise ValueError(f"dimension mismatch: matrix is {a.n}x{a.n}, vector has length {x.shape[0]}")
    return a.csr @ x


def pad(a: SymSparseMatrix, s: int) -> SymSparseMatrix:
    """Extend ``a`` by ``s`` all-zero rows and columns."""
    if s < 0:
        raise ValueError("padding size must be nonnegative")
    if s == 0:
        return a
    c = a.csr
    indptr = np.concatenate([c.indptr, np.full(s, c.indptr[-1], dtype=c.indptr.dtype)])
    n = a.n + s
    return SymSparseMatrix(sp.csr_matrix((c.data, c.indices, indptr), shape=(n, n)), check=False)


@dataclass(frozen=True)
class GraphUpdate:
    """Structured symmetric perturbation applied after padding by ``n_new`` nodes."""

    n_old: int
    n_new: int
    k_block: SymSparseMatrix
    g_block: sp.csr_matrix
    c_block: SymSparseMatrix

    def __post_init__(self):
        if self.n_new < 0:
            raise ValueError("n_new must be nonnegative")
        if self.k_block.n != self.n_old:
            raise ValueError("k_block must be n_old x n_old")
        if self.c_block.n != self.n_new:
            raise ValueError("c_block must be n_new x n_new")
        if self.g_block.shape != (self.n_old, self.n_new):
            raise ValueError("g_block must be n_old x n_new")

    @classmethod
    def empty(cls, n_old: int, n_new: int = 0) -> "GraphUpdate":
        return cls(
            n_old,
            n_new,
            SymSparseMatrix.zeros(n_old),
            sp.csr_matrix((n_old, n_new)),
            SymSparseMatrix.zeros(n_new),
        )

    @classmethod
    def from_blocks(cls, k_block, g_block, c_block) -> "GraphUpdate":
        k_block = k_block if isinstance(k_block, SymSparseMatrix) else SymSparseMatrix(k_block)
        c_block = c_block if isinstance(c_block, SymSparseMatrix) else SymSparseMatrix(c_block)
        g = _canonical_csr(g_block)
        return cls(k_block.n, c_block.n, k_block, g, c_block)

    @property
    def n_total(self) -> int:
        return self.n_old + self.n_new

    def is_null(self) -> bool:
        return (
            self.n_new == 0
            and self.k_block.nnz == 0
            and self.g_block.nnz == 0
            and self.c_block.nnz == 0
        )

    def has_topology_changes(self) -> bool:
        return self.k_block.nnz > 0

    def to_sparse(self) -> sp.csr_matrix:
        """Full ``(N+S) x (N+S)`` perturbation matrix."""
        return _canonical_csr(
            sp.bmat(
                [[self.k_block.csr, self.g_block], [self.g_block.T, self.c_block.csr]],
                format="csr",
            ),
            shape=(self.n_total, self.n_total),
        )

    def delta2(self) -> sp.csr_matrix:
        """Trailing ``n_new`` columns ``[G; C]`` of the perturbation."""
        return sp.vstack([self.g_block, self.c_block.csr], format="csr")

    def delta1_times(self, x: np.ndarray) -> np.ndarray:
        """Product of the leading ``n_old`` columns with ``x`` (equal to Delta @ pad(x))."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.n_old:
            raise ValueError("row count of x must equal n_old")
        top = self.k_block.csr @ x
        bottom = self.g_block.T @ x
        return np.concatenate([np.asarray(top), np.asarray(bottom)], axis=0)

    def times(self, z: np.ndarray) -> np.ndarray:
        """Product ``Delta @ z`` for ``z`` with ``n_old + n_new`` rows, without assembling Delta."""
        z = np.asarray(z, dtype=np.float64)
        if z.shape[0] != self.n_total:
            raise ValueError("row count of z must equal n_old + n_new")
        zt, zb = z[: self.n_old], z[self.n_old :]
        top = self.k_block.csr @ zt + self.g_block @ zb
        bottom = self.g_block.T @ zt + self.c_block.csr @ zb
        return np.concatenate([np.asarray(top), np.asarray(bottom)], axis=0)

    def frobenius_norm(self) -> float:
        g = self.g_block.data
        return float(
            np.sqrt(self.k_block.frobenius_norm() ** 2 + 2.0 * np.dot(g, g) + self.c_block.frobenius_norm() ** 2)
        )

    def new_node_support(self) -> tuple[int, int]:
        """Return ``(J, Q)``: old nodes linked to new ones and new nodes linked to old ones."""
        g = self.g_block
        j = int(np.count_nonzero(np.diff(g.indptr)))
        q = int(np.unique(g.indices).size)
        return j, q


def apply_update(a_padded: SymSparseMatrix, d: GraphUpdate) -> SymSparseMatrix:
    """Assemble ``a_padded + Delta``, rejecting deletions of absent entries."""
    if a_padded.n != d.n_total:
        raise ValueError(
            f"dimension mismatch: padded matrix is {a_padded.n}, update expects {d.n_total}"
        )
    delta = d.to_sparse()
    if delta.nnz:
        neg = delta.multiply(delta < 0).tocoo()
        if neg.nnz:
            present = np.asarray(a_padded.csr[neg.row, neg.col]).ravel()
            if np.any(present == 0):
                k = int(np.flatnonzero(present == 0)[0])
                raise ValueError(f"invalid deletion at ({neg.row[k]}, {neg.col[k]}): entry not present")
    out = _canonical_csr(a_padded.csr + delta)
    scale = max(1.0, float(np.abs(out.data).max(initial=0.0)))
    if np.any(out.data < -1e-12 * scale):
        raise ValueError("update produces a negative weight")
    return SymSparseMatrix(out, check=False)


def assemble_update(
    n_old: int,
    added_edges: Sequence[Sequence] = (),
    removed_edges: Sequence[Sequence] = (),
    n_new: int = 0,
    new_edges: Sequence[Sequence] = (),
) -> GraphUpdate:
    """Route edge lists into the ``K``/``G``/``C`` blocks of a :class:`GraphUpdate`.

    Node indices are global: ``0 .. n_old-1`` are existing nodes and
    ``n_old .. n_old+n_new-1`` are the incoming ones. Added edges are
    ``(i, j)`` or ``(i, j, w)``; removed edges contribute ``-w`` (default 1)
    and must lie among existing nodes.
    """
    n_tot = n_old + n_new
    seen: set[tuple[int, int]] = set()
    k_ent: list[tuple[int, int, float]] = []
    g_ent: list[tuple[int, int, float]] = []
    c_ent: list[tuple[int, int, float]] = []

    def key(i, j):
        if i == j:
            raise ValueError(f"self-loop ({i}, {j}) not allowed")
        if not (0 <= i < n_tot and 0 <= j < n_tot):
            raise ValueError(f"edge ({i}, {j}) out of range for {n_tot} nodes")
        k = (min(i, j), max(i, j))
        if k in seen:
            raise ValueError(f"duplicate edge {k}")
        seen.add(k)
        return k

    for e in list(added_edges) + list(new_edges):
        i, j = key(int(e[0]), int(e[1]))
        w = float(e[2]) if len(e) > 2 else 1.0
        if w <= 0:
            raise ValueError("added edge weights must be positive")
        if j < n_old:
            k_ent.append((i, j, w))
        elif i < n_old:
            g_ent.append((i, j - n_old, w))
        else:
            c_ent.append((i - n_old, j - n_old, w))
    for e in removed_edges:
        i, j = key(int(e[0]), int(e[1]))
        if j >= n_old:
            raise ValueError(f"removed edge ({i}, {j}) touches a new node")
        w = float(e[2]) if len(e) > 2 else 1.0
        k_ent.append((i, j, -w))

    k_block = SymSparseMatrix.from_edges(n_old, k_ent)
    c_block = SymSparseMatrix.from_edges(n_new, c_ent)
    if g_ent:
        gi, gj, gw = zip(*g_ent)
        g = sp.coo_matrix((gw, (gi, gj)), shape=(n_old, n_new))
    else:
        g = sp.csr_matrix((n_old, n_new))
    return GraphUpdate(n_old, n_new, k_block, _canonical_csr(g, shape=(n_old, n_new)), c_block)


def split_difference(new: SymSparseMatrix, old: SymSparseMatrix) -> GraphUpdate:
    """Express ``new - pad(old)`` as a :class:`GraphUpdate`."""
    n_old, n_tot = old.n, new.n
    if n_tot < n_old:
        raise ValueError("new matrix is smaller than old matrix")
    diff = _canonical_csr(new.csr - pad(old, n_tot - n_old).csr)
    k = diff[:n_old, :n_old]
    g = diff[:n_old, n_old:]
    c = diff[n_old:, n_old:]
    return GraphUpdate(
        n_old,
        n_tot - n_old,
        SymSparseMatrix(k, check=False),
        _canonical_csr(g, shape=(n_old, n_tot - n_old)),
        SymSparseMatrix(c, check=False),
    )


def degrees(a: SymSparseMatrix) -> np.ndarray:
    return np.asarray(a.csr.sum(axis=1)).ravel()


def to_shifted_laplacian(
    a: SymSparseMatrix, kind: str = "combinatorial", alpha: float | None = None
) -> SymSparseMatrix:
    """Return ``alpha * I - L`` for the combinatorial or normalized Laplacian.

    ``alpha`` defaults to ``2 * d_max`` (combinatorial) or 2 (normalized).
    Zero-degree nodes get a normalized-Laplacian diagonal of 0.
    """
    d = degrees(a)
    n = a.n
    if kind == "combinatorial":
        bound = 2.0 * float(d.max(initial=0.0))
        if alpha is None:
            alpha = bound
        elif alpha < bound:
            warnings.warn(
                f"alpha={alpha} is below 2*d_max={bound}; shifted spectrum may be negative",
                SpectrumShiftWarning,
                stacklevel=2,
            )
        diag = alpha - d
        out = a.csr + sp.diags(diag, format="csr")
    elif kind == "normalized":
        if alpha is None:
            alpha = 2.0
        elif alpha < 2.0:
            warnings.warn(
                f"alpha={alpha} is below 2; shifted spectrum may be negative",
                SpectrumShiftWarning,
                stacklevel=2,
            )
        with np.errstate(divide="ignore"):
            dinv = np.where(d > 0, 1.0 / np.sqrt(np.where(d > 0, d, 1.0)), 0.0)
        scale = sp.diags(dinv, format="csr")
        ln_diag = (d > 0).astype(np.float64)
        out = scale @ a.csr @ scale + sp.diags(alpha - ln_diag, format="csr")
        out = (out + out.T) * 0.5
    else:
        raise ValueError(f"unknown Laplacian kind {kind!r}")
    return SymSparseMatrix(_canonical_csr(out, shape=(n, n)), check=False)


@dataclass
class DynamicGraphStream:
    """Initial matrix plus an ordered sequence of updates.

    ``labels[t]`` (optional) holds ground-truth cluster ids of the nodes of
    the graph at time ``t`` in matrix order, for ``t = 0 .. T``.
    ``node_ids`` maps final matrix indices back to source node ids.
    """

    initial: SymSparseMatrix
    updates: list[GraphUpdate]
    labels: list[np.ndarray] | None = None
    node_ids: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.initial.n
        for t, d in enumerate(self.updates):
            if d.n_old != n:
                raise ValueError(f"update {t} expects {d.n_old} nodes, stream has {n}")
            n += d.n_new
        if self.labels is not None and len(self.labels) != len(self.updates) + 1:
            raise ValueError("labels must cover every time step including t=0")

    @property
    def t_steps(self) -> int:
        return len(self.updates)

    def sizes(self) -> list[int]:
        out = [self.initial.n]
        for d in self.updates:
            out.append(out[-1] + d.n_new)
        return out

    def matrices(self) -> Iterator[SymSparseMatrix]:
        """Yield the true matrices ``A(0), ..., A(T)`` by folding the updates."""
        a = self.initial
        yield a
        for d in self.updates:
            a = apply_update(pad(a, d.n_new), d)
            yield a
