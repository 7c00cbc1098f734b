"""Dense and Krylov kernels used by the trackers and the reference oracle."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, aslinearoperator

ORDERS = ("abs_desc", "alg_desc")


@dataclass
class SpectralEmbedding:
    """``K`` eigenvalue estimates and the matching ``N x K`` eigenvector estimates."""

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[1] != self.values.shape[0]:
            raise ValueError("vectors must be N x K with K == len(values)")

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    def padded(self, s: int) -> np.ndarray:
        if s == 0:
            return self.vectors
        return np.vstack([self.vectors, np.zeros((s, self.k))])

    def truncated(self, k: int) -> "SpectralEmbedding":
        return SpectralEmbedding(self.values[:k].copy(), self.vectors[:, :k].copy())


class EigResult(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


class LanczosConvergenceError(RuntimeError):
    """Lanczos did not reach the residual tolerance; carries the best estimate so far."""

    def __init__(self, message, residuals, embedding):
        super().__init__(message)
        self.residuals = residuals
        self.embedding = embedding


def order_indices(values: np.ndarray, order: str) -> np.ndarray:
    """Deterministic sort: by magnitude or algebraic value, ties broken by value then index."""
    values = np.asarray(values)
    idx = np.arange(values.shape[0])
    if order == "abs_desc":
        return np.lexsort((idx, -values, -np.abs(values)))
    if order == "alg_desc":
        return np.lexsort((idx, -values))
    raise ValueError(f"unknown ordering {order!r}")


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of every column made positive
    if vectors.size == 0:
        return vectors
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eig_dense(s, order: str = "alg_desc") -> EigResult:
    """Full eigendecomposition of a small dense symmetric matrix.

    The input is symmetrized as ``(S + S.T) / 2`` before factorization.
    Eigenvector signs are normalized so the largest-magnitude entry of each
    column is positive, which makes the output deterministic.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"matrix must be square, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValueError("matrix has non-finite entries")
    if s.size == 0:
        return EigResult(np.zeros(0), np.zeros((0, 0)))
    scale = np.abs(s).max()
    if np.abs(s - s.T).max() > 1e-8 * scale:
        raise ValueError("matrix is not symmetric")
    w, v = np.linalg.eigh(0.5 * (s + s.T))
    idx = order_indices(w, order)
    return EigResult(w[idx], _fix_signs(v[:, idx]))


def orthonormalize(m, against=None, drop_tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis for the columns of ``m`` orthogonal to ``against``.

    Classical Gram-Schmidt with a second full pass, column by column.
    A column whose norm after both passes falls below ``drop_tol`` times its
    original norm is treated as linearly dependent and dropped.

    Returns
    -------
    ndarray of shape (n, r), r <= m.shape[1]
    """
    if drop_tol <= 0:
        raise ValueError("drop_tol must be positive")
    m = np.asarray(m, dtype=np.float64)
    if m.ndim == 1:
        m = m[:, None]
    n, d = m.shape
    k0 = 0 if against is None else against.shape[1]
    basis = np.empty((n, k0 + d))
    if k0:
        basis[:, :k0] = against
    r = 0
    for c in range(d):
        v = m[:, c].copy()
        nrm0 = np.linalg.norm(v)
        if nrm0 == 0.0:
            continue
        b = basis[:, : k0 + r]
        if b.shape[1]:
            v -= b @ (b.T @ v)
            v -= b @ (b.T @ v)
        nrm = np.linalg.norm(v)
        if nrm <= drop_tol * nrm0:
            continue
        basis[:, k0 + r] = v / nrm
        r += 1
    return basis[:, k0 : k0 + r].copy()


def solve_linear_small(a, b, ridge_fallback: float = 1e-10) -> tuple[np.ndarray, bool]:
    """Solve a small dense system with partial pivoting.

    If a pivot falls below ``1e-12 * max|A|`` the system
    ``(A + ridge_fallback * I) x = b`` is solved instead.

    Returns
    -------
    x : ndarray
    used_fallback : bool
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("non-finite input")
    k = a.shape[0]
    if k < 1 or a.shape != (k, k) or b.shape[0] != k:
        raise ValueError("expected a k x k matrix and a length-k vector, k >= 1")
    scale = np.abs(a).max()
    if scale > 0:
        with warnings.catch_warnings():
            # singularity is detected from the pivots below
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(a, check_finite=False)
        if np.abs(np.diag(lu)).min() >= 1e-12 * scale:
            return sla.lu_solve((lu, piv), b, check_finite=False), False
    shifted = a + ridge_fallback * np.eye(k)
    try:
        x = np.linalg.solve(shifted, b)
    except np.linalg.LinAlgError:
        x = np.linalg.lstsq(shifted, b, rcond=None)[0]
    return x, True


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator (Philox) so streams are reproducible across platforms."""
    return np.random.Generator(np.random.Philox(seed))


def rsvd_basis(op, s_cols: int, l: int, p: int = 0, seed=0, rank_tol: float = 1e-10) -> np.ndarray:
    """Approximate leading left singular vectors of a black-box operator.

    Parameters
    ----------
    op : LinearOperator-like of shape (n, s_cols)
        Needs ``matmat`` and ``rmatmat`` (the adjoint is used to project the
        operator onto the sketched range).
    l : int
        Target rank.
    p : int
        Oversampling; the sketch has ``l + p`` Gaussian columns.
    seed : int
        Seed for the Gaussian test matrix.

    Returns
    -------
    ndarray of shape (n, r) with orthonormal columns, ``r = min(l, numerical rank)``.
    """
    if l < 1 or p < 0:
        raise ValueError("need l >= 1 and p >= 0")
    op = aslinearoperator(op)
    n = op.shape[0]
    if op.shape[1] != s_cols:
        raise ValueError("operator column count does not match s_cols")
    if s_cols == 0 or n == 0:
        return np.zeros((n, 0))
    omega = make_rng(seed).standard_normal((s_cols, l + p))
    y = np.asarray(op.matmat(omega))
    m = orthonormalize(y)
    if m.shape[1] == 0:
        return np.zeros((n, 0))
    # M^T op, formed through the adjoint
    small = np.asarray(op.rmatmat(m)).T
    u, sig, _ = np.linalg.svd(small, full_matrices=False)
    if sig.size == 0 or sig[0] == 0.0:
        return np.zeros((n, 0))
    r = min(l, int(np.count_nonzero(sig > rank_tol * sig[0])))
    return m @ u[:, :r]


def as_operator(a, n: int | None = None) -> tuple[Callable[[np.ndarray], np.ndarray], int]:
    """Normalize a matrix-like or callable into ``(matvec, n)``."""
    from .graph import SymSparseMatrix

    if isinstance(a, SymSparseMatrix):
        csr = a.csr
        return (lambda x: csr @ x), a.n
    if sp.issparse(a) or isinstance(a, np.ndarray):
        return (lambda x: a @ x), a.shape[0]
    if isinstance(a, LinearOperator):
        return a.matvec, a.shape[0]
    if callable(a):
        if n is None:
            raise ValueError("n is required when passing a bare callable")
        return a, n
    raise TypeError(f"cannot use {type(a).__name__} as an operator")


def lanczos_topk(
    a,
    k: int,
    order: str = "abs_desc",
    tol: float = 1e-10,
    max_basis: int | None = None,
    seed=0,
    n: int | None = None,
    max_restarts: int = 1000,
) -> SpectralEmbedding:
    """Leading ``k`` eigenpairs of a symmetric operator by thick-restart Lanczos.

    Every new Lanczos vector is fully reorthogonalized (two passes) against
    the whole basis. When the basis reaches ``max_basis`` vectors it is
    compressed to the best ``k + (max_basis - k) // 2`` Ritz vectors and the
    iteration continues from the residual direction.

    Convergence: ``||A x_i - lambda_i x_i|| <= tol * ||A||`` for each returned
    pair, with ``||A||`` estimated by the largest Ritz value seen.
    """
    apply, n = as_operator(a, n)
    if order not in ORDERS:
        raise ValueError(f"unknown ordering {order!r}")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_basis is None:
        max_basis = max(2 * k + 20, 40)
    m = min(max(max_basis, k + 1), n)
    rng = make_rng(seed)

    V = np.zeros((n, m))
    H = np.zeros((m, m))
    v = rng.standard_normal(n)
    V[:, 0] = v / np.linalg.norm(v)
    j0 = 0
    anorm = 0.0
    fvec = np.zeros(n)
    fbeta = 0.0

    def fresh_direction(cols):
        # random vector orthogonal to the current basis
        for _ in range(5):
            w = rng.standard_normal(n)
            b = V[:, :cols]
            w -= b @ (b.T @ w)
            w -= b @ (b.T @ w)
            nw = np.linalg.norm(w)
            if nw > 1e-8:
                return w / nw
        raise RuntimeError("could not extend Krylov basis")

    for _restart in range(max_restarts + 1):
        for j in range(j0, m):
            w = np.asarray(apply(V[:, j]), dtype=np.float64).ravel()
            b = V[:, : j + 1]
            h = b.T @ w
            w -= b @ h
            h2 = b.T @ w
            w -= b @ h2
            h += h2
            H[: j + 1, j] = h
            H[j, : j + 1] = h
            beta = np.linalg.norm(w)
            anorm = max(anorm, np.abs(h).max(initial=0.0), beta)
            if j + 1 < m:
                if beta <= 1e-12 * max(anorm, 1e-300):
                    V[:, j + 1] = fresh_direction(j + 1)
                    beta = 0.0
                else:
                    V[:, j + 1] = w / beta
                H[j + 1, j] = H[j, j + 1] = beta
            else:
                fvec, fbeta = w, beta

        theta, S = np.linalg.eigh(0.5 * (H + H.T))
        anorm = max(anorm, np.abs(theta).max())
        idx = order_indices(theta, order)
        resid = fbeta * np.abs(S[m - 1, idx])
        if m == n:
            resid = np.zeros_like(resid)
        want = idx[:k]
        if np.all(resid[:k] <= tol * anorm):
            x = _fix_signs(V @ S[:, want])
            return SpectralEmbedding(theta[want], x)

        nkeep = min(k + (m - k) // 2, m - 1)
        keep = idx[:nkeep]
        V[:, :nkeep] = V @ S[:, keep]
        H[:] = 0.0
        H[np.arange(nkeep), np.arange(nkeep)] = theta[keep]
        if fbeta <= 1e-12 * anorm:
            V[:, nkeep] = fresh_direction(nkeep)
            coupling = np.zeros(nkeep)
        else:
            V[:, nkeep] = fvec / fbeta
            coupling = fbeta * S[m - 1, keep]
        H[nkeep, :nkeep] = coupling
        H[:nkeep, nkeep] = coupling
        j0 = nkeep

    best = SpectralEmbedding(theta[want], _fix_signs(V @ S[:, want]))
    raise LanczosConvergenceError(
        f"Lanczos did not converge after {max_restarts} restarts", resid[:k], best
    )
