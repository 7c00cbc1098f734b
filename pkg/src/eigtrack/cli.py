"""Command line entry point: ``eigtrack {ingest,track,summarize,gen-sbm}``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .dynamics import SbmConfig
from .experiment import OPERATORS, SCENARIOS, ExperimentConfig, emit_summary, run_experiment
from .io import ingest_edge_list
from .trackers import METHODS


def _csv_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _tasks(text: str) -> tuple[list[str], int | None]:
    """Parse ``angles,centrality(100),clustering``; the optional ``(J)`` sets top-J."""
    tasks, top_j = [], None
    for item in _csv_list(text):
        if item.startswith("centrality(") and item.endswith(")"):
            top_j = int(item[len("centrality(") : -1])
            item = "centrality"
        tasks.append(item)
    return tasks, top_j


def cmd_ingest(args) -> int:
    ing = ingest_edge_list(Path(args.input))
    info = {"nodes": ing.n, **ing.counts}
    if ing.graph is not None:
        info["format"] = "static"
    else:
        info["format"] = "timestamped"
        info["timestamped_edges"] = len(ing.timestamped)
    text = json.dumps(info, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def cmd_gen_sbm(args) -> int:
    cfg = SbmConfig(
        n=args.n,
        k_clusters=args.k_clusters,
        p_in=args.p_in,
        p_out=args.p_out,
        n0=args.n0,
        t_steps=args.t_steps,
        s_per_step=args.s_per_step,
        seed=args.seed,
    )
    text = json.dumps(cfg.to_dict(), indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_track(args) -> int:
    tasks, top_j = _tasks(args.tasks)
    sbm = None
    if args.scenario == "sbm":
        if args.input:
            with open(args.input, encoding="utf-8") as fh:
                sbm = SbmConfig(**json.load(fh))
        else:
            sbm = SbmConfig()
        if args.t_steps is not None:
            sbm = replace(sbm, t_steps=args.t_steps)
        sbm = replace(sbm, seed=args.seed)
    cfg = ExperimentConfig(
        scenario=args.scenario,
        methods=_csv_list(args.methods),
        k=args.k,
        t_steps=args.t_steps if args.t_steps is not None else (sbm.t_steps if sbm else 10),
        seed=args.seed,
        repeats=args.repeats,
        input=None if args.scenario == "sbm" else args.input,
        mu=args.mu,
        rsvd_l=args.rsvd_l,
        rsvd_p=args.rsvd_p,
        theta=args.theta,
        min_restart_gap=args.min_restart_gap,
        operator=args.operator,
        tasks=tasks,
        top_j=top_j if top_j is not None else args.top_j,
        out=args.out,
        sbm=sbm,
        m0=args.m0,
        n_clusters=args.n_clusters,
    )
    runs = run_experiment(cfg)
    print(f"wrote {len(runs)} repeat(s), {sum(len(r) for r in runs)} rows to {args.out}")
    return 0


def cmd_summarize(args) -> int:
    table = emit_summary(args.input, args.out, top_m=args.top_m)
    if not args.out:
        print("statistic,method,index,value,p_out,k_clusters")
        for row in table:
            print(",".join("%.17g" % v if isinstance(v, float) else str(v) for v in row))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eigtrack", description="Track leading eigenpairs of evolving graphs.")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("ingest", help="parse an edge list and report its shape")
    q.add_argument("--input", required=True)
    q.add_argument("--out")
    q.set_defaults(func=cmd_ingest)

    q = sub.add_parser("gen-sbm", help="write a dynamic SBM configuration")
    q.add_argument("--n", type=int, default=10_000)
    q.add_argument("--k-clusters", type=int, default=5)
    q.add_argument("--p-in", type=float, default=0.05)
    q.add_argument("--p-out", type=float, default=0.001)
    q.add_argument("--n0", type=int, default=9_500)
    q.add_argument("--t-steps", type=int, default=10)
    q.add_argument("--s-per-step", type=int, default=50)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out")
    q.set_defaults(func=cmd_gen_sbm)

    q = sub.add_parser("track", help="run trackers on a stream and write long-form CSV")
    q.add_argument("--input", help="edge list, or SBM config JSON for --scenario sbm")
    q.add_argument("--scenario", choices=SCENARIOS, default="sbm")
    q.add_argument("--methods", default="grest3", help=f"comma list of {','.join(METHODS)}")
    q.add_argument("--k", type=int, default=64)
    q.add_argument("--t-steps", type=int)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--repeats", type=int, default=10)
    q.add_argument("--mu", type=float, default=0.0)
    q.add_argument("--rsvd-l", type=int, default=100)
    q.add_argument("--rsvd-p", type=int, default=100)
    q.add_argument("--theta", type=float, default=0.01)
    q.add_argument("--min-restart-gap", type=int, default=5)
    q.add_argument("--operator", choices=OPERATORS, default="adjacency")
    q.add_argument("--tasks", default="angles", help="comma list of angles,centrality(J),clustering")
    q.add_argument("--top-j", type=int, default=100)
    q.add_argument("--m0", type=int, help="initial edge count for the timestamped scenario")
    q.add_argument("--n-clusters", type=int, help="k-means cluster count (default: SBM cluster count)")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_track)

    q = sub.add_parser("summarize", help="aggregate run directories into a summary CSV")
    q.add_argument("--input", nargs="+", required=True)
    q.add_argument("--top-m", type=int, default=32)
    q.add_argument("--out")
    q.set_defaults(func=cmd_summarize)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"eigtrack: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
