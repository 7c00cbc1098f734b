"""Batch experiments: build a stream, track it with several methods, write long-form CSV."""
from __future__ import annotations

import csv
import json
import math
import os
import time
from collections import defaultdict
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .dynamics import SbmConfig, sbm_dynamic_stream, scenario1_stream, scenario2_stream
from .graph import DynamicGraphStream
from .io import ingest_edge_list
from .linalg import lanczos_topk
from .metrics import (
    adjusted_rand_index,
    eigenvector_angles,
    kmeans_cluster,
    subgraph_centrality_topj,
    subspace_distance,
    top_j_overlap,
)
from .trackers import METHODS, TrackerConfig, shifted_laplacian_stream, state_from_embedding, step

HEADER = ["time", "method", "metric", "index", "value"]
SUMMARY_HEADER = ["statistic", "method", "index", "value", "p_out", "k_clusters"]
SCENARIOS = ("static-split", "timestamped", "sbm")
OPERATORS = ("adjacency", "laplacian", "normalized-laplacian")
TASKS = ("angles", "centrality", "clustering")


@dataclass
class ExperimentConfig:
    scenario: str = "sbm"
    methods: tuple = ("grest3",)
    k: int = 64
    t_steps: int = 10
    seed: int = 0
    repeats: int = 1
    input: str | None = None
    mu: float = 0.0
    rsvd_l: int = 100
    rsvd_p: int = 100
    theta: float = 0.01
    min_restart_gap: int = 5
    operator: str = "adjacency"
    tasks: tuple = ("angles",)
    top_j: int = 100
    out: str | None = None
    sbm: SbmConfig | None = None
    m0: int | None = None
    n_clusters: int | None = None
    reference_tol: float = 1e-10

    def __post_init__(self):
        self.methods = tuple(self.methods)
        self.tasks = tuple(self.tasks)
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.operator not in OPERATORS:
            raise ValueError(f"unknown operator {self.operator!r}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ValueError(f"unknown or missing methods {bad}")
        bad = [t for t in self.tasks if t not in TASKS]
        if bad or not self.tasks:
            raise ValueError(f"need at least one task from {TASKS}; got {self.tasks}")
        if self.k < 1 or self.repeats < 1:
            raise ValueError("k and repeats must be >= 1")
        if "centrality" in self.tasks and self.operator != "adjacency":
            raise ValueError("centrality needs the adjacency operator")
        if self.scenario != "sbm" and self.input is None:
            raise ValueError(f"scenario {self.scenario!r} needs an input edge list")
        if "clustering" in self.tasks and self.scenario != "sbm":
            raise ValueError("clustering needs ground-truth labels (sbm scenario)")

    def tracker_config(self, method: str, seed: int) -> TrackerConfig:
        mode = "adjacency" if self.operator == "adjacency" else "shifted"
        return TrackerConfig(
            method=method,
            k=self.k,
            mode=mode,
            mu=self.mu,
            rsvd_l=self.rsvd_l,
            rsvd_p=self.rsvd_p,
            theta=self.theta,
            min_restart_gap=self.min_restart_gap,
            seed=seed,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        d["tasks"] = list(self.tasks)
        return d


def build_stream(cfg: ExperimentConfig, rep: int = 0) -> tuple[DynamicGraphStream, dict]:
    """Stream for repeat ``rep`` plus ingestion counts for the manifest."""
    info: dict = {}
    if cfg.scenario == "sbm":
        base = cfg.sbm or SbmConfig(t_steps=cfg.t_steps)
        stream = sbm_dynamic_stream(replace(base, seed=base.seed + rep))
    else:
        ing = ingest_edge_list(Path(cfg.input))
        info = dict(ing.counts)
        if cfg.scenario == "static-split":
            if ing.graph is None:
                raise ValueError("static-split needs a two-column edge list")
            stream = scenario1_stream(ing.graph, cfg.t_steps)
            stream.node_ids = ing.node_ids[stream.node_ids]
        else:
            if ing.timestamped is None:
                raise ValueError("timestamped scenario needs a three-column edge list")
            stream = scenario2_stream(ing.timestamped, cfg.t_steps, cfg.m0)
            stream.node_ids = ing.node_ids[stream.node_ids]
            info["duplicate_edges"] = stream.meta["duplicate_edges"]
    return stream, info


def _operator_stream(cfg: ExperimentConfig, stream: DynamicGraphStream) -> DynamicGraphStream:
    if cfg.operator == "adjacency":
        return stream
    kind = "combinatorial" if cfg.operator == "laplacian" else "normalized"
    return shifted_laplacian_stream(stream, kind).stream


def _fmt(x) -> str:
    return "%.17g" % x if isinstance(x, float) else str(x)


def run_repeat(cfg: ExperimentConfig, rep: int) -> tuple[list[tuple], dict]:
    """Run every method on one stream; returns long-form rows and manifest info."""
    seed = cfg.seed + rep
    raw, info = build_stream(cfg, rep)
    stream = _operator_stream(cfg, raw)
    mats = list(stream.matrices())
    order = cfg.tracker_config(cfg.methods[0], seed).order
    if cfg.k > mats[0].n:
        raise ValueError(f"k={cfg.k} exceeds the initial node count {mats[0].n}")

    def reference(a):
        return lanczos_topk(a, cfg.k, order=order, tol=cfg.reference_tol, seed=seed)

    init = reference(mats[0])
    states = {m: state_from_embedding(init, cfg.tracker_config(m, seed)) for m in cfg.methods}
    errors: dict[str, str] = {}
    provider = mats.__getitem__
    n_clusters = cfg.n_clusters or (cfg.sbm.k_clusters if cfg.sbm else None)
    rows: list[tuple] = []

    for t, d in enumerate(stream.updates, start=1):
        ref = reference(mats[t])
        ref_top = subgraph_centrality_topj(ref, cfg.top_j) if "centrality" in cfg.tasks else None
        if "clustering" in cfg.tasks:
            truth = stream.labels[t]
            ref_ari = adjusted_rand_index(kmeans_cluster(ref.vectors, n_clusters, seed), truth)
            rows.append((t, "reference", "ari", 0, ref_ari))
        for m in cfg.methods:
            if m in errors:
                continue
            start = time.perf_counter()
            try:
                states[m] = step(states[m], d, provider)
            except Exception as exc:  # recorded, other methods keep going
                errors[m] = f"t={t}: {type(exc).__name__}: {exc}"
                rows.append((t, m, "error", 0, math.nan))
                continue
            elapsed = time.perf_counter() - start
            est = states[m].embedding
            if "angles" in cfg.tasks:
                for i, psi in enumerate(eigenvector_angles(ref, est), start=1):
                    rows.append((t, m, "angle", i, float(psi)))
                rows.append((t, m, "subspace_angle", cfg.k, subspace_distance(ref.vectors, est.vectors)))
            if "centrality" in cfg.tasks:
                top = subgraph_centrality_topj(est, cfg.top_j)
                rows.append((t, m, "centrality_overlap", cfg.top_j, top_j_overlap(top, ref_top, cfg.top_j)))
            if "clustering" in cfg.tasks:
                lab = kmeans_cluster(est.vectors, n_clusters, seed)
                rows.append((t, m, "ari", 0, adjusted_rand_index(lab, truth)))
            rows.append((t, m, "runtime", 0, elapsed))
    info.update(
        repeat=rep,
        seed=seed,
        sizes=stream.sizes(),
        errors=errors,
        restarts={m: list(s.restarts) for m, s in states.items() if s.restarts},
        ridge_fallbacks={m: s.ridge_fallbacks for m, s in states.items() if s.ridge_fallbacks},
    )
    return rows, info


def write_rows(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def run_experiment(cfg: ExperimentConfig) -> list[list[tuple]]:
    """Run all repeats; writes ``repNNN.csv`` files and ``manifest.json`` when ``cfg.out`` is set."""
    all_rows, infos = [], []
    for rep in range(cfg.repeats):
        rows, info = run_repeat(cfg, rep)
        all_rows.append(rows)
        infos.append(info)
        if cfg.out:
            os.makedirs(cfg.out, exist_ok=True)
            write_rows(Path(cfg.out) / f"rep{rep:03d}.csv", rows)
    if cfg.out:
        manifest = {"config": cfg.to_dict(), "repeats": infos}
        with open(Path(cfg.out) / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, default=str)
    return all_rows


def read_rows(path) -> list[tuple]:
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header != HEADER:
            raise ValueError(f"{path}: expected header {','.join(HEADER)}, got {header}")
        out = []
        for lineno, row in enumerate(r, start=2):
            if len(row) != len(HEADER):
                raise ValueError(f"{path}:{lineno}: expected {len(HEADER)} fields")
            try:
                out.append((int(row[0]), row[1], row[2], int(row[3]), float(row[4])))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed row {row}") from None
    return out


def _sweep_columns(directory: Path) -> tuple[str, str]:
    mf = directory / "manifest.json"
    if not mf.exists():
        return "", ""
    with open(mf, encoding="utf-8") as fh:
        sbm = json.load(fh).get("config", {}).get("sbm") or {}
    return _fmt(sbm.get("p_out", "")), _fmt(sbm.get("k_clusters", ""))


def summarize_rows(runs: list[list[tuple]], top_m: int = 32) -> list[tuple]:
    """Aggregate the rows of several repeats into ``(statistic, method, index, value)``."""
    acc = defaultdict(list)
    ref_ari = {}
    for r, rows in enumerate(runs):
        k = max((i for _, _, metric, i, _ in rows if metric == "angle"), default=0)
        m_cap = min(top_m, k)
        per_time = defaultdict(list)
        for t, method, metric, i, v in rows:
            if metric == "angle":
                acc[("angle_time_mean", method, i)].append(v)
                acc[("angle_mean", method, 0)].append(v)
                if i <= m_cap:
                    per_time[(method, t)].append(v)
            elif metric == "runtime":
                acc[("runtime_mean", method, 0)].append(v)
            elif metric == "centrality_overlap":
                acc[("centrality_overlap_mean", method, i)].append(v)
            elif metric == "ari":
                acc[("ari_mean", method, 0)].append(v)
                if method == "reference":
                    ref_ari[(r, t)] = v
        for (method, t), vals in per_time.items():
            acc[("angle_eig_mean", method, t)].append(float(np.mean(vals)))
        for t, method, metric, i, v in rows:
            if metric == "ari" and method != "reference":
                ref = ref_ari.get((r, t))
                if ref:
                    acc[("ari_ratio_mean", method, 0)].append(v / ref)
    return [(s, m, i, float(np.mean(v))) for (s, m, i), v in sorted(acc.items())]


def emit_summary(inputs, out_path=None, top_m: int = 32) -> list[tuple]:
    """Summarize run directories (or single CSV files) into one plot-ready table.

    Each input directory is summarized on its own; its SBM ``p_out`` and
    cluster count (from ``manifest.json``) are attached so that sweeps can
    be plotted directly.
    """
    table = []
    for item in inputs:
        p = Path(item)
        files = sorted(p.glob("rep*.csv")) if p.is_dir() else [p]
        if not files:
            raise ValueError(f"{p}: no rep*.csv files")
        runs = [read_rows(f) for f in files]
        cols = _sweep_columns(p if p.is_dir() else p.parent)
        table += [row + cols for row in summarize_rows(runs, top_m)]
    if out_path is not None:
        with open(out_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_HEADER)
            for row in table:
                w.writerow([_fmt(v) for v in row])
    return table
