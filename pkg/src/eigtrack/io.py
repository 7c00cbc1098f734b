"""Reading SNAP-style edge lists."""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .dynamics import TimestampedEdgeList
from .graph import SymSparseMatrix


@dataclass
class Ingested:
    """Result of :func:`ingest_edge_list`.

    Exactly one of ``graph`` (two-column input) and ``timestamped``
    (three-column input) is set. ``node_ids[i]`` is the source id of
    compacted node ``i``.
    """

    node_ids: np.ndarray
    graph: SymSparseMatrix | None = None
    timestamped: TimestampedEdgeList | None = None
    counts: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.node_ids.shape[0])


def _read_text(source) -> str:
    if isinstance(source, os.PathLike) or (isinstance(source, str) and "\n" not in source and os.path.exists(source)):
        with open(source, encoding="utf-8") as fh:
            return fh.read()
    if hasattr(source, "read"):
        return source.read()
    return str(source)


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def ingest_edge_list(source) -> Ingested:
    """Parse ``u v`` or ``u v t`` lines (``#`` comments, whitespace or commas).

    A non-numeric first line (a CSV header) is skipped.

    ``source`` is a path, an open file or the text itself. Node ids are
    compacted to ``0 .. n-1`` by first appearance. Self-loops are dropped
    in both formats; for two-column input repeated undirected edges are
    dropped too. The counts of dropped lines are in ``counts``.
    """
    text = _read_text(source)
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("%"):
            continue
        parts = line.replace(",", " ").split()
        if width is None:
            width = len(parts)
            if width not in (2, 3):
                raise ValueError(f"line {lineno}: expected 2 or 3 columns, got {width}")
        if len(parts) != width:
            raise ValueError(f"line {lineno}: expected {width} columns, got {len(parts)}")
        try:
            vals = [int(p) for p in parts[:2]] + [float(p) for p in parts[2:]]
        except ValueError:
            if not rows and not any(_is_number(p) for p in parts):
                width = None  # column header such as ``id1,id2``
                continue
            raise ValueError(f"line {lineno}: malformed entry {line!r}") from None
        if vals[0] < 0 or vals[1] < 0:
            raise ValueError(f"line {lineno}: node ids must be nonnegative")
        rows.append(vals)
    if not rows:
        raise ValueError("edge list contains no edges")

    data = np.asarray(rows, dtype=np.float64)
    uv = data[:, :2].astype(np.int64)
    ids, first = np.unique(uv.ravel(), return_index=True)
    seq = np.argsort(first, kind="stable")
    remap = np.empty(ids.shape[0], dtype=np.int64)
    remap[seq] = np.arange(ids.shape[0])
    local = remap[np.searchsorted(ids, uv)]
    node_ids = ids[seq]
    loops = local[:, 0] == local[:, 1]
    counts = {"lines": len(rows), "self_loops": int(loops.sum())}

    if width == 3:
        e = np.column_stack([local[~loops], data[~loops, 2]])
        return Ingested(node_ids, timestamped=TimestampedEdgeList(e, node_ids), counts=counts)

    kept = local[~loops]
    key = np.sort(kept, axis=1)
    uniq = np.unique(key, axis=0)
    counts["duplicates"] = int(kept.shape[0] - uniq.shape[0])
    counts["edges"] = int(uniq.shape[0])
    g = SymSparseMatrix.from_edges(node_ids.shape[0], uniq)
    return Ingested(node_ids, graph=g, counts=counts)
