"""Eigenpair trackers for evolving symmetric matrices.

Every tracker keeps the ``K`` leading eigenpairs of the current matrix and
updates them from a :class:`~eigtrack.graph.GraphUpdate` without ever
assembling the updated matrix (TIMERS restarts are the exception: they
recompute from the true matrix).

Perturbation trackers
    ``trip-basic``, ``trip`` and ``rm`` use first-order corrections built
    from the tracked pairs only.
Projection trackers
    ``iasc``, ``grest2``, ``grest3`` and ``grest-rsvd`` build an orthonormal
    basis ``Z`` and extract Ritz pairs of ``Z^T (Abar + Delta) Z`` where
    ``Abar`` is replaced by its rank-``K`` approximation.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator

from .graph import (
    DynamicGraphStream,
    GraphUpdate,
    SymSparseMatrix,
    split_difference,
    to_shifted_laplacian,
    degrees,
)
from .linalg import (
    SpectralEmbedding,
    lanczos_topk,
    order_indices,
    orthonormalize,
    rsvd_basis,
    solve_linear_small,
    sym_eig_dense,
)

METHODS = ("trip-basic", "trip", "rm", "iasc", "timers", "grest2", "grest3", "grest-rsvd")
BASIS_KINDS = ("iasc", "grest2", "grest3", "grest-rsvd")
MODES = {"adjacency": "abs_desc", "shifted": "alg_desc"}


@dataclass(frozen=True)
class TrackerConfig:
    """Tracker kind plus hyperparameters.

    ``mode='adjacency'`` orders pairs by magnitude; ``mode='shifted'`` orders
    them algebraically (used for shifted Laplacians). ``trip_form`` selects
    how TRIP turns its ``K x K`` solve into an eigenvector: ``'correction'``
    gives ``x_j + X b_j``, ``'literal'`` gives ``X b_j``.
    """

    method: str = "grest3"
    k: int = 64
    mode: str = "adjacency"
    mu: float = 0.0
    rsvd_l: int = 100
    rsvd_p: int = 100
    theta: float = 0.01
    min_restart_gap: int = 5
    seed: int = 0
    trip_form: str = "correction"
    lanczos_tol: float = 1e-10
    drop_tol: float = 1e-10
    ridge: float = 1e-10

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.trip_form not in ("correction", "literal"):
            raise ValueError("trip_form must be 'correction' or 'literal'")
        if self.rsvd_l < 1 or self.rsvd_p < 0:
            raise ValueError("need rsvd_l >= 1 and rsvd_p >= 0")
        if self.theta < 0:
            raise ValueError("theta must be nonnegative")

    @property
    def order(self) -> str:
        return MODES[self.mode]


@dataclass(frozen=True)
class TrackerState:
    embedding: SpectralEmbedding
    n: int
    config: TrackerConfig
    t: int = 0
    accumulated_change: float = 0.0
    steps_since_restart: int = 0
    restart_scale: float = 1.0
    restarts: tuple[int, ...] = ()
    ridge_fallbacks: int = 0

    def __post_init__(self):
        if self.embedding.n != self.n:
            raise ValueError("embedding row count must equal n")


def state_from_embedding(emb: SpectralEmbedding, config: TrackerConfig) -> TrackerState:
    scale = float(np.linalg.norm(emb.values))
    return TrackerState(emb, emb.n, config, restart_scale=scale if scale > 0 else 1.0)


def tracker_init(a0, k: int, method: str | TrackerConfig = "grest3", **options) -> TrackerState:
    """Compute the initial ``k`` leading pairs of ``a0`` and wrap them in a state."""
    config = method if isinstance(method, TrackerConfig) else TrackerConfig(method=method, k=k, **options)
    if isinstance(method, TrackerConfig) and (config.k != k or options):
        config = replace(config, k=k, **options)
    n = a0.n if isinstance(a0, SymSparseMatrix) else a0.shape[0]
    if k > n:
        raise ValueError(f"cannot track k={k} pairs of a {n}-node graph")
    emb = lanczos_topk(a0, k, order=config.order, tol=config.lanczos_tol, seed=config.seed)
    return state_from_embedding(emb, config)


def _check(state: TrackerState, d: GraphUpdate):
    if d.n_old != state.n:
        raise ValueError(f"update expects {d.n_old} nodes but tracker holds {state.n}")


def _unchanged(state: TrackerState, d: GraphUpdate) -> TrackerState:
    return replace(state, t=state.t + 1, steps_since_restart=state.steps_since_restart + 1)


def _gap_eps(values: np.ndarray) -> float:
    top = float(np.abs(values).max(initial=0.0))
    return 1e-12 * max(1.0, top)


def _finish(state, d, values, vectors, normalize=True, **changes) -> TrackerState:
    if normalize:
        norms = np.linalg.norm(vectors, axis=0)
        norms[norms == 0] = 1.0
        vectors = vectors / norms
    idx = order_indices(values, state.config.order)
    emb = SpectralEmbedding(values[idx], vectors[:, idx])
    return replace(
        state,
        embedding=emb,
        n=d.n_total,
        t=state.t + 1,
        steps_since_restart=state.steps_since_restart + 1,
        **changes,
    )


def _first_order_terms(state: TrackerState, d: GraphUpdate):
    x = state.embedding.vectors
    lam = state.embedding.values
    dx = d.delta1_times(x)  # Delta @ pad(X)
    m = x.T @ dx[: d.n_old]  # pad(X)^T Delta pad(X) = X^T K X
    return x, lam, dx, m


def _pair_coefficients(lam: np.ndarray, m: np.ndarray) -> np.ndarray:
    """``coef[i, j] = m[i, j] / (lam[j] - lam[i])`` for ``i != j``; near-degenerate gaps give 0."""
    gaps = lam[None, :] - lam[:, None]
    small = np.abs(gaps) < _gap_eps(lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(small, 0.0, m / np.where(small, 1.0, gaps))
    np.fill_diagonal(coef, 0.0)
    return coef


def trip_basic_step(state: TrackerState, d: GraphUpdate) -> TrackerState:
    _check(state, d)
    if d.is_null():
        return _unchanged(state, d)
    x, lam, _, m = _first_order_terms(state, d)
    new_lam = lam + np.diag(m)
    xt = x + x @ _pair_coefficients(lam, m)
    xt = np.vstack([xt, np.zeros((d.n_new, x.shape[1]))])
    return _finish(state, d, new_lam, xt)


def trip_step(state: TrackerState, d: GraphUpdate) -> TrackerState:
    _check(state, d)
    if d.is_null():
        return _unchanged(state, d)
    x, lam, _, m = _first_order_terms(state, d)
    k = lam.shape[0]
    new_lam = lam + np.diag(m)
    coeffs = np.zeros((k, k))
    fallbacks = 0
    literal = state.config.trip_form == "literal"
    for j in range(k):
        rhs = m[:, j]
        if not np.any(rhs):
            b = np.zeros(k)
        else:
            system = np.diag(new_lam[j] - lam) - m
            b, used = solve_linear_small(system, rhs, state.config.ridge)
            fallbacks += used
        if literal:
            if np.any(b):
                coeffs[:, j] = b
            else:
                coeffs[j, j] = 1.0
        else:
            coeffs[:, j] = b
            coeffs[j, j] += 1.0
    xt = np.vstack([x @ coeffs, np.zeros((d.n_new, k))])
    return _finish(state, d, new_lam, xt, ridge_fallbacks=state.ridge_fallbacks + fallbacks)


def residual_modes_step(state: TrackerState, d: GraphUpdate, mu: float | None = None) -> TrackerState:
    _check(state, d)
    mu = state.config.mu if mu is None else mu
    lam = state.embedding.values
    dist = np.abs(lam - mu)
    if np.any(dist < _gap_eps(lam)):
        raise ValueError(f"mu={mu} collides with tracked eigenvalue")
    if d.is_null():
        return _unchanged(state, d)
    x, lam, dx, m = _first_order_terms(state, d)
    new_lam = lam + np.diag(m)
    xbar = state.embedding.padded(d.n_new)
    in_span = xbar @ (np.eye(lam.shape[0]) + _pair_coefficients(lam, m))
    residual = dx - xbar @ m  # (I - Xbar Xbar^T) Delta Xbar
    xt = in_span + residual / (lam - mu)[None, :]
    return _finish(state, d, new_lam, xt)


def _projected_delta2(xbar: np.ndarray, d: GraphUpdate) -> LinearOperator:
    delta2 = d.delta2()

    def matmat(v):
        y = delta2 @ v
        return y - xbar @ (xbar.T @ y)

    def rmatmat(u):
        u = np.asarray(u)
        return delta2.T @ (u - xbar @ (xbar.T @ u))

    def matvec(v):
        return matmat(np.asarray(v).reshape(-1, 1)).ravel()

    def rmatvec(u):
        return rmatmat(np.asarray(u).reshape(-1, 1)).ravel()

    return LinearOperator(
        (d.n_total, d.n_new),
        matvec=matvec,
        rmatvec=rmatvec,
        matmat=matmat,
        rmatmat=rmatmat,
        dtype=np.float64,
    )


def build_projection_basis(
    state: TrackerState,
    d: GraphUpdate,
    kind: str,
    seed=None,
    l: int | None = None,
    p: int | None = None,
) -> np.ndarray:
    """Orthonormal projection basis for the Rayleigh-Ritz step.

    ``iasc``: ``[[X, 0], [0, I]]``. ``grest2``: ``Xbar`` plus the part of
    ``Delta Xbar`` orthogonal to it. ``grest3``: additionally the trailing
    ``n_new`` columns of Delta. ``grest-rsvd``: like ``grest3`` with those
    columns replaced by a randomized rank-``l`` basis of their projection
    (used only when ``n_new > l``).
    """
    _check(state, d)
    if kind not in BASIS_KINDS:
        raise ValueError(f"unknown basis kind {kind!r}")
    cfg = state.config
    l = cfg.rsvd_l if l is None else l
    p = cfg.rsvd_p if p is None else p
    seed = (cfg.seed, state.t + 1) if seed is None else seed
    x = state.embedding.vectors
    k = x.shape[1]
    s = d.n_new
    xbar = state.embedding.padded(s)
    if kind == "iasc":
        z = np.zeros((d.n_total, k + s))
        z[: d.n_old, :k] = x
        z[d.n_old :, k:] = np.eye(s)
        return z
    dx = d.delta1_times(x)
    if kind == "grest2" or s == 0:
        extra = dx
    elif kind == "grest3" or s <= l:
        extra = np.hstack([dx, d.delta2().toarray()])
    else:
        r = rsvd_basis(_projected_delta2(xbar, d), s, l, p, seed=_seed_int(seed))
        extra = np.hstack([dx, r])
    q = orthonormalize(extra, against=xbar, drop_tol=cfg.drop_tol)
    return np.hstack([xbar, q])


def _seed_int(seed) -> int:
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    return int(np.random.SeedSequence(list(seed)).generate_state(1, dtype=np.uint64)[0])


def rayleigh_ritz_step(state: TrackerState, d: GraphUpdate, z: np.ndarray, k: int | None = None) -> TrackerState:
    """Ritz pairs of ``Z^T (Xbar Lambda Xbar^T + Delta) Z`` lifted back through ``Z``.

    ``k`` Ritz pairs are kept (default: as many as the state tracks).
    """
    _check(state, d)
    z = np.asarray(z, dtype=np.float64)
    if z.shape[0] != d.n_total:
        raise ValueError("basis row count must equal n_old + n_new")
    k = state.embedding.k if k is None else k
    if z.shape[1] < k:
        raise ValueError(f"projection subspace too small: dimension {z.shape[1]} < k={k}")
    x = state.embedding.vectors
    lam = state.embedding.values
    ztx = z[: d.n_old].T @ x
    proj = (ztx * lam[None, :]) @ ztx.T + z.T @ d.times(z)
    theta, f = sym_eig_dense(0.5 * (proj + proj.T), order=state.config.order)
    return _finish(state, d, theta[:k].copy(), z @ f[:, :k], normalize=False)


def grest_step(state: TrackerState, d: GraphUpdate, kind: str | None = None) -> TrackerState:
    kind = state.config.method if kind is None else kind
    if kind == "timers":
        kind = "iasc"
    _check(state, d)
    if d.is_null():
        return _unchanged(state, d)
    return rayleigh_ritz_step(state, d, build_projection_basis(state, d, kind))


def iasc_step(state: TrackerState, d: GraphUpdate) -> TrackerState:
    return grest_step(state, d, "iasc")


def timers_step(
    state: TrackerState,
    d: GraphUpdate,
    inner: Callable[[TrackerState, GraphUpdate], TrackerState] | None = None,
    full_matrix_provider: Callable[[int], SymSparseMatrix] | None = None,
) -> TrackerState:
    """Inner tracker with error-proxy-triggered full recomputation.

    The proxy accumulates ``||Delta||_F / ||Lambda_restart||_F``. When it
    reaches ``theta`` and at least ``min_restart_gap`` steps have passed
    since the last restart, the pairs are recomputed from
    ``full_matrix_provider(t)`` and the proxy is reset.
    """
    _check(state, d)
    cfg = state.config
    inner = iasc_step if inner is None else inner
    t = state.t + 1
    rho = state.accumulated_change + d.frobenius_norm() / state.restart_scale
    since = state.steps_since_restart + 1
    if rho >= cfg.theta and since >= cfg.min_restart_gap:
        if full_matrix_provider is None:
            raise ValueError("TIMERS restart needs a full_matrix_provider")
        a = full_matrix_provider(t)
        if a.n != d.n_total:
            raise ValueError("full matrix size does not match the update")
        emb = lanczos_topk(a, cfg.k, order=cfg.order, tol=cfg.lanczos_tol, seed=cfg.seed)
        scale = float(np.linalg.norm(emb.values))
        return replace(
            state,
            embedding=emb,
            n=a.n,
            t=t,
            accumulated_change=0.0,
            steps_since_restart=0,
            restart_scale=scale if scale > 0 else 1.0,
            restarts=state.restarts + (t,),
        )
    out = inner(state, d)
    return replace(out, accumulated_change=rho, steps_since_restart=since)


_STEPS = {
    "trip-basic": trip_basic_step,
    "trip": trip_step,
    "rm": residual_modes_step,
    "iasc": iasc_step,
    "grest2": grest_step,
    "grest3": grest_step,
    "grest-rsvd": grest_step,
}


def step(
    state: TrackerState,
    d: GraphUpdate,
    full_matrix_provider: Callable[[int], SymSparseMatrix] | None = None,
) -> TrackerState:
    """Advance ``state`` by one update using the method in its config."""
    method = state.config.method
    if method == "timers":
        return timers_step(state, d, iasc_step, full_matrix_provider)
    return _STEPS[method](state, d)


def run_tracker(
    stream: DynamicGraphStream, config: TrackerConfig, initial: SpectralEmbedding | None = None
) -> list[SpectralEmbedding]:
    """Track a whole stream; returns the embedding at every step ``t = 0 .. T``."""
    matrices = None
    if config.method == "timers":
        matrices = list(stream.matrices())
    if initial is None:
        state = tracker_init(stream.initial, config.k, config)
    else:
        state = state_from_embedding(initial, config)
    out = [state.embedding]
    provider = (lambda t: matrices[t]) if matrices is not None else None
    for d in stream.updates:
        state = step(state, d, provider)
        out.append(state.embedding)
    return out


@dataclass
class ShiftedStream:
    """Stream of shifted Laplacians ``alpha_t I - L_t`` and the shift used at each step."""

    stream: DynamicGraphStream
    alphas: list[float] = field(default_factory=list)
    kind: str = "combinatorial"


def shifted_laplacian_stream(stream: DynamicGraphStream, kind: str = "combinatorial") -> ShiftedStream:
    """Rewrite an adjacency stream as a stream of shifted Laplacians.

    The combinatorial shift starts at ``2 * d_max(0)`` and is raised to
    ``2 * d_max(t)`` whenever the maximum degree grows; it never decreases.
    The extra ``(alpha_new - alpha_old) I`` is part of the difference
    update. The normalized kind always uses ``alpha = 2``.
    """
    mats = list(stream.matrices())
    alphas = []
    shifted = []
    alpha = 0.0
    for a in mats:
        if kind == "combinatorial":
            alpha = max(alpha, 2.0 * float(degrees(a).max(initial=0.0)))
        elif kind == "normalized":
            alpha = 2.0
        else:
            raise ValueError(f"unknown Laplacian kind {kind!r}")
        alphas.append(alpha)
        shifted.append(to_shifted_laplacian(a, kind, alpha))
    updates = [split_difference(shifted[t + 1], shifted[t]) for t in range(len(mats) - 1)]
    out = DynamicGraphStream(shifted[0], updates, stream.labels, stream.node_ids, dict(stream.meta))
    return ShiftedStream(out, alphas, kind)


def laplacian_embedding(emb: SpectralEmbedding, alpha: float) -> SpectralEmbedding:
    """Map leading pairs of ``alpha I - L`` to trailing pairs of ``L``."""
    return SpectralEmbedding(alpha - emb.values, emb.vectors)


def laplacian_tracking_adapter(
    stream: DynamicGraphStream,
    kind: str = "combinatorial",
    k: int = 8,
    inner: str = "grest3",
    **options,
) -> list[SpectralEmbedding]:
    """Track the ``k`` smallest Laplacian eigenpairs through the shifted operator.

    Returns one embedding per step with eigenvalues of ``L`` in ascending
    order.
    """
    sh = shifted_laplacian_stream(stream, kind)
    config = TrackerConfig(method=inner, k=k, mode="shifted", **options)
    embs = run_tracker(sh.stream, config)
    return [laplacian_embedding(e, a) for e, a in zip(embs, sh.alphas)]
