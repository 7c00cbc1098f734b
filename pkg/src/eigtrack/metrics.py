"""Accuracy and downstream-task metrics for tracked embeddings."""
from __future__ import annotations

import warnings
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from numpy.polynomial import Polynomial
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning
from sklearn.metrics import adjusted_rand_score

from .linalg import SpectralEmbedding


def _angles(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # arccos |x^T y| evaluated as 2 arcsin(|x - s y| / 2) with s = sign(x^T y):
    # same value, but exact for identical vectors and accurate for tiny angles
    x = x / np.linalg.norm(x, axis=0)
    y = y / np.linalg.norm(y, axis=0)
    s = np.where(np.sum(x * y, axis=0) < 0, -1.0, 1.0)
    half = np.linalg.norm(x - s * y, axis=0) / 2
    return np.minimum(2 * np.arcsin(np.minimum(half, 1.0)), np.pi / 2)


def principal_angle(x, y) -> float:
    """Angle ``arccos |x^T y|`` between two directions, in ``[0, pi/2]``."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError("vectors must have the same length")
    if not np.any(x) or not np.any(y):
        raise ValueError("zero vector has no direction")
    return float(_angles(x[:, None], y[:, None])[0])


def eigenvector_angles(ref: SpectralEmbedding, est: SpectralEmbedding, k: int | None = None) -> np.ndarray:
    """Index-to-index angles between the first ``k`` columns of two embeddings."""
    k = min(ref.k, est.k) if k is None else k
    if ref.n != est.n:
        raise ValueError("embeddings live on different node sets")
    return _angles(ref.vectors[:, :k], est.vectors[:, :k])


def subspace_distance(x, y) -> float:
    """Largest principal angle between ``span(x)`` and ``span(y)``.

    Not an eigenvector-level metric; insensitive to rotations within
    clusters of nearly equal eigenvalues.
    """
    return float(np.max(sla.subspace_angles(np.asarray(x), np.asarray(y)), initial=0.0))


def _as_poly(h):
    if isinstance(h, Polynomial):
        return h
    if h == "identity":
        return Polynomial([0.0, 1.0])
    if isinstance(h, str):
        raise ValueError(f"unknown matrix function {h!r}")
    return Polynomial(np.asarray(h, dtype=np.float64))


def exp_apply_scaled(e: SpectralEmbedding, v) -> tuple[np.ndarray, float]:
    """``exp(A) v`` through the embedding, as ``(y, s)`` with ``exp(A) v = e**s * y``."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] != e.n:
        raise ValueError("vector length must equal the embedding's row count")
    if e.k == 0:
        return np.zeros_like(v), 0.0
    shift = float(e.values.max())
    coef = np.exp(e.values - shift) * (e.vectors.T @ v)
    return e.vectors @ coef, shift


def matrix_function_apply(e: SpectralEmbedding, h, v) -> np.ndarray:
    """Apply ``h(A) ~ X h(Lambda) X^T`` to ``v``.

    ``h`` is ``'exp'``, ``'identity'``, a :class:`numpy.polynomial.Polynomial`
    or a coefficient sequence (lowest degree first). For ``'exp'`` the
    result raises ``OverflowError`` when it is not representable; use
    :func:`exp_apply_scaled` in that case.
    """
    if isinstance(h, str) and h == "exp":
        y, s = exp_apply_scaled(e, v)
        with np.errstate(over="ignore"):
            scale = np.exp(s)
        if not np.isfinite(scale):
            raise OverflowError("exp(A) v overflows; use exp_apply_scaled")
        return scale * y
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] != e.n:
        raise ValueError("vector length must equal the embedding's row count")
    return e.vectors @ (_as_poly(h)(e.values) * (e.vectors.T @ v))


def subgraph_centrality_topj(e: SpectralEmbedding, j: int) -> np.ndarray:
    """Indices of the ``j`` nodes with largest ``[exp(A) 1]_i``; ties by ascending index.

    Scores within ``1e-12`` (relative to the largest) count as ties, so
    rounding noise does not reorder nodes that are symmetric in the graph.
    """
    if not 0 <= j <= e.n:
        raise ValueError(f"j={j} outside [0, {e.n}]")
    y, _ = exp_apply_scaled(e, np.ones(e.n))
    tol = 1e-12 * max(float(np.abs(y).max(initial=0.0)), np.finfo(float).tiny)
    order = np.lexsort((np.arange(e.n), -np.round(y / tol)))
    return order[:j]


def top_j_overlap(est, ref, j: int | None = None) -> float:
    """``|est & ref| / j``."""
    est, ref = set(np.asarray(est).tolist()), set(np.asarray(ref).tolist())
    j = len(ref) if j is None else j
    if len(est) != j or len(ref) != j:
        raise ValueError("both sets must contain exactly j ids")
    if j == 0:
        raise ValueError("j must be positive")
    return len(est & ref) / j


def kmeans_cluster(points, k: int, seed: int = 0, n_init: int = 10) -> np.ndarray:
    """k-means++ / Lloyd on the rows of ``points``; best inertia of ``n_init`` runs.

    Labels are renumbered ``0 .. r-1`` in order of first appearance so that
    empty clusters never leave gaps.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if not 1 <= k <= pts.shape[0]:
        raise ValueError(f"k={k} must be in [1, {pts.shape[0]}]")
    with warnings.catch_warnings():
        # duplicate points with k > distinct rows is allowed
        warnings.simplefilter("ignore", ConvergenceWarning)
        km = KMeans(n_clusters=k, init="k-means++", n_init=n_init, max_iter=300, tol=1e-6, random_state=seed)
        raw = km.fit_predict(pts)
    _, first, inv = np.unique(raw, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first)] = np.arange(first.size)
    return rank[inv]


def adjusted_rand_index(a, b) -> float:
    a, b = np.asarray(a).ravel(), np.asarray(b).ravel()
    if a.shape != b.shape:
        raise ValueError("partitions must have equal length")
    return float(adjusted_rand_score(a, b))


def angle_summaries(
    reference: Sequence[SpectralEmbedding],
    estimate: Sequence[SpectralEmbedding],
    top_m: int = 32,
) -> tuple[np.ndarray, np.ndarray]:
    """Time-averaged angle per eigenvector and eigen-averaged angle per time.

    Returns ``(per_vector, per_time)``: ``per_vector[i]`` averages
    ``psi[i, t]`` over all steps for each tracked index; ``per_time[t]``
    averages ``psi[i, t]`` over the first ``top_m`` indices.
    """
    if len(reference) != len(estimate):
        raise ValueError("reference and estimate sequences differ in length")
    if not reference:
        raise ValueError("empty sequences")
    k = min(min(r.k for r in reference), min(e.k for e in estimate))
    if top_m > k:
        raise ValueError(f"top_m={top_m} exceeds K={k}")
    psi = np.stack([eigenvector_angles(r, e, k) for r, e in zip(reference, estimate)], axis=1)
    return psi.mean(axis=1), psi[:top_m].mean(axis=0)
