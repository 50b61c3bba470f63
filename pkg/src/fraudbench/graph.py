"""Labeled graph model, file I/O, random generation and structural statistics.

A :class:`LabeledGraph` is an undirected simple graph whose vertices are split
into fraud and benign sets. Vertex identifiers are opaque strings; everything
internal works on dense integer indices in ``vertex_ids`` order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse


class GraphFormatError(ValueError):
    """Raised when an edge, label or metadata file cannot be parsed."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def _normalize_edges(edges, n: int) -> np.ndarray:
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if e.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if (e < 0).any() or (e >= n).any():
        raise ValueError("edge endpoint is not a declared vertex")
    if (e[:, 0] == e[:, 1]).any():
        raise ValueError("self-loops are not allowed")
    e = np.sort(e, axis=1)
    e = np.unique(e, axis=0)  # lexicographically sorted, deduplicated
    return e


@dataclass(frozen=True, eq=False)
class LabeledGraph:
    """Immutable undirected simple graph with fraud/benign vertex labels.

    Build instances through :meth:`from_edges`, which validates and
    canonicalizes the edge array (``i < j``, sorted, unique).
    """

    vertex_ids: tuple[str, ...]
    is_fraud: np.ndarray
    edges: np.ndarray
    metadata: np.ndarray | None = None

    @classmethod
    def from_edges(
        cls,
        vertex_ids: Sequence[str],
        is_fraud,
        edges,
        metadata=None,
    ) -> "LabeledGraph":
        vertex_ids = tuple(str(v) for v in vertex_ids)
        n = len(vertex_ids)
        if len(set(vertex_ids)) != n:
            raise ValueError("vertex ids must be unique")
        is_fraud = np.asarray(is_fraud, dtype=bool).reshape(-1)
        if is_fraud.shape[0] != n:
            raise ValueError("one label per vertex is required")
        e = _normalize_edges(edges, n)
        if metadata is not None:
            metadata = np.asarray(metadata, dtype=float)
            if metadata.ndim != 2 or metadata.shape[0] != n:
                raise ValueError("metadata must have shape (n_vertices, d)")
            metadata = _frozen(metadata)
        return cls(vertex_ids, _frozen(is_fraud), _frozen(e), metadata)

    # -- sizes -------------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.vertex_ids)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def n_fraud(self) -> int:
        return int(self.is_fraud.sum())

    @property
    def n_benign(self) -> int:
        return self.n - self.n_fraud

    @cached_property
    def fraud_indices(self) -> np.ndarray:
        return _frozen(np.flatnonzero(self.is_fraud))

    @cached_property
    def benign_indices(self) -> np.ndarray:
        return _frozen(np.flatnonzero(~self.is_fraud))

    # -- structure ---------------------------------------------------------
    @cached_property
    def index_of(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.vertex_ids)}

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.bincount(self.edges.ravel(), minlength=self.n).astype(np.int64)
        return _frozen(deg)

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric 0/1 adjacency matrix (CSR, int64)."""
        n, e = self.n, self.edges
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        data = np.ones(rows.shape[0], dtype=np.int64)
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

    def has_edge(self, u: str, v: str) -> bool:
        """Edge membership by vertex id; unknown ids are simply absent."""
        idx = self.index_of
        if u not in idx or v not in idx or u == v:
            return False
        i, j = sorted((idx[u], idx[v]))
        pos = np.searchsorted(self.edges[:, 0], i, side="left")
        end = np.searchsorted(self.edges[:, 0], i, side="right")
        return bool(np.any(self.edges[pos:end, 1] == j))

    # -- derived graphs ----------------------------------------------------
    def induced_subgraph(self, indices) -> "LabeledGraph":
        """Subgraph on ``indices`` (kept in the given order)."""
        indices = np.asarray(indices, dtype=np.int64)
        remap = np.full(self.n, -1, dtype=np.int64)
        remap[indices] = np.arange(indices.shape[0])
        e = remap[self.edges]
        e = e[(e >= 0).all(axis=1)]
        meta = None if self.metadata is None else self.metadata[indices]
        ids = tuple(self.vertex_ids[i] for i in indices)
        return LabeledGraph.from_edges(ids, self.is_fraud[indices], e, meta)

    def with_edges(self, edges) -> "LabeledGraph":
        return LabeledGraph.from_edges(self.vertex_ids, self.is_fraud, edges, self.metadata)

    def with_labels(self, is_fraud) -> "LabeledGraph":
        return LabeledGraph.from_edges(self.vertex_ids, is_fraud, self.edges, self.metadata)

    def equals(self, other: "LabeledGraph") -> bool:
        """Exact equality of ids, labels, edges and metadata."""
        if self.vertex_ids != other.vertex_ids:
            return False
        if not np.array_equal(self.is_fraud, other.is_fraud):
            return False
        if not np.array_equal(self.edges, other.edges):
            return False
        if (self.metadata is None) != (other.metadata is None):
            return False
        return self.metadata is None or np.array_equal(self.metadata, other.metadata)

    def __repr__(self) -> str:
        return (
            f"LabeledGraph(n={self.n}, n_fraud={self.n_fraud}, "
            f"n_edges={self.n_edges}, metadata={self.metadata is not None})"
        )


@dataclass(frozen=True)
class SbmParams:
    """Two-block stochastic block model: fraud block, benign block, cross edges."""

    n_fraud: int
    n_benign: int
    p_fraud: float
    p_benign: float
    p_cross: float

    def __post_init__(self):
        if self.n_fraud < 0 or self.n_benign < 0:
            raise ValueError("block sizes must be nonnegative")
        for name in ("p_fraud", "p_benign", "p_cross"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} outside [0, 1]")


@dataclass(frozen=True, eq=False)
class GraphStats:
    edge_count_bb: int
    edge_count_bf: int
    edge_count_ff: int
    degree_sequence_benign: np.ndarray
    triangle_count: int
    max_degree: int

    @property
    def edge_count(self) -> int:
        return self.edge_count_bb + self.edge_count_bf + self.edge_count_ff

    @property
    def max_benign_degree(self) -> int:
        d = self.degree_sequence_benign
        return int(d.max()) if d.size else 0


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def _read_edge_lines(path) -> list[tuple[str, str]]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphFormatError(f"{path}:{lineno}: expected two vertex ids, got {line!r}")
            u, v = parts
            if u == v:
                raise GraphFormatError(f"{path}:{lineno}: self-loop on {u!r}")
            pairs.append((u, v))
    return pairs


def _read_labels(path) -> dict[str, bool]:
    labels: dict[str, bool] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["vertex", "label"]:
            raise GraphFormatError(f"{path}:1: header must be 'vertex,label'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise GraphFormatError(f"{path}:{lineno}: expected 2 columns")
            v, lab = row[0].strip(), row[1].strip()
            if lab not in ("0", "1"):
                raise GraphFormatError(f"{path}:{lineno}: label must be 0 or 1, got {lab!r}")
            if v in labels:
                raise GraphFormatError(f"{path}:{lineno}: duplicate label for {v!r}")
            labels[v] = lab == "1"
    return labels


def _read_metadata(path, vertex_ids: Sequence[str]) -> np.ndarray:
    rows: dict[str, list[float]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not header or header[0].strip() != "vertex" or len(header) < 2:
            raise GraphFormatError(f"{path}:1: header must be 'vertex,f1,...,fd'")
        d = len(header) - 1
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise GraphFormatError(f"{path}:{lineno}: expected {d + 1} columns")
            try:
                rows[row[0].strip()] = [float(x) for x in row[1:]]
            except ValueError as exc:
                raise GraphFormatError(f"{path}:{lineno}: {exc}") from None
    missing = [v for v in vertex_ids if v not in rows]
    if missing:
        raise GraphFormatError(f"{path}: no metadata for vertex {missing[0]!r}")
    return np.array([rows[v] for v in vertex_ids], dtype=float)


def load_graph(edge_path, label_path, metadata_path=None) -> LabeledGraph:
    """Read a graph from an edge list, a label CSV and optional metadata CSV.

    Vertex order follows the label file. Duplicate and reversed edge lines
    collapse to one edge; labeled vertices without edges are kept.
    """
    pairs = _read_edge_lines(edge_path)
    labels = _read_labels(label_path)
    vertex_ids = list(labels)
    index = {v: i for i, v in enumerate(vertex_ids)}
    edges = np.empty((len(pairs), 2), dtype=np.int64)
    for k, (u, v) in enumerate(pairs):
        for w in (u, v):
            if w not in index:
                raise GraphFormatError(f"{edge_path}: vertex {w!r} has no label")
        edges[k] = index[u], index[v]
    meta = _read_metadata(metadata_path, vertex_ids) if metadata_path else None
    return LabeledGraph.from_edges(vertex_ids, [labels[v] for v in vertex_ids], edges, meta)


def write_graph(graph: LabeledGraph, edge_path, label_path, metadata_path=None) -> None:
    ids = graph.vertex_ids
    with open(edge_path, "w", encoding="utf-8") as fh:
        for i, j in graph.edges:
            fh.write(f"{ids[i]} {ids[j]}\n")
    with open(label_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vertex", "label"])
        for v, f in zip(ids, graph.is_fraud):
            w.writerow([v, int(f)])
    if metadata_path is not None and graph.metadata is not None:
        with open(metadata_path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            d = graph.metadata.shape[1]
            w.writerow(["vertex"] + [f"f{k + 1}" for k in range(d)])
            for v, row in zip(ids, graph.metadata):
                w.writerow([v] + [repr(float(x)) for x in row])


# ---------------------------------------------------------------------------
# Random generation
# ---------------------------------------------------------------------------

def _triu_pairs(flat: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Decode row-major indices of the strict upper triangle of an n x n matrix."""
    flat = np.asarray(flat, dtype=np.int64)
    if flat.size == 0:
        return flat, flat
    # rows start at s(i) = i*(2n - i - 1)/2
    disc = (2 * n - 1) ** 2 - 8 * flat.astype(float)
    i = np.floor(((2 * n - 1) - np.sqrt(np.maximum(disc, 0.0))) / 2).astype(np.int64)
    i = np.clip(i, 0, n - 2)

    def start(r):
        return r * (2 * n - r - 1) // 2

    # guard against float rounding at row boundaries
    for _ in range(2):
        i = np.where(start(i) > flat, i - 1, i)
        i = np.where(start(i + 1) <= flat, i + 1, i)
    j = flat - start(i) + i + 1
    return i, j


def _bernoulli_subset(rng: np.random.Generator, n_pairs: int, p: float) -> np.ndarray:
    """Indices of pairs that receive an edge under i.i.d. Bernoulli(p).

    Drawing the count from Binomial(n_pairs, p) and then a uniform subset of
    that size has exactly the product-Bernoulli distribution.
    """
    if n_pairs == 0 or p <= 0.0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(n_pairs, dtype=np.int64)
    m = int(rng.binomial(n_pairs, p))
    return np.sort(rng.choice(n_pairs, size=m, replace=False)).astype(np.int64)


def sbm_vertex_ids(n_benign: int, n_fraud: int) -> list[str]:
    return [f"b{i}" for i in range(n_benign)] + [f"f{i}" for i in range(n_fraud)]


def sample_sbm(params: SbmParams, seed) -> LabeledGraph:
    """Sample a two-block SBM graph.

    Benign vertices come first (ids ``b0..``), then fraud (``f0..``).
    """
    rng = np.random.default_rng(seed)
    nb, nf = params.n_benign, params.n_fraud
    chunks = []

    bb = _bernoulli_subset(rng, nb * (nb - 1) // 2, params.p_benign)
    i, j = _triu_pairs(bb, nb)
    chunks.append(np.column_stack([i, j]))

    ff = _bernoulli_subset(rng, nf * (nf - 1) // 2, params.p_fraud)
    i, j = _triu_pairs(ff, nf)
    chunks.append(np.column_stack([i + nb, j + nb]))

    bf = _bernoulli_subset(rng, nb * nf, params.p_cross)
    chunks.append(np.column_stack([bf // max(nf, 1), nb + bf % max(nf, 1)]))

    edges = np.concatenate(chunks) if chunks else np.empty((0, 2), dtype=np.int64)
    is_fraud = np.r_[np.zeros(nb, dtype=bool), np.ones(nf, dtype=bool)]
    return LabeledGraph.from_edges(sbm_vertex_ids(nb, nf), is_fraud, edges)


def inject_fraud_clique(graph: LabeledGraph, size: int, density: float, seed) -> LabeledGraph:
    """Relabel ``size`` random benign vertices as fraud and densify them.

    Each pair inside the chosen set gains an edge with probability ``density``;
    edges already present are kept.
    """
    if size < 0 or size > graph.n_benign:
        raise ValueError(f"clique size {size} exceeds benign count {graph.n_benign}")
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    if size == 0:
        return graph
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(graph.benign_indices, size=size, replace=False))
    ii, jj = np.triu_indices(size, k=1)
    keep = rng.random(ii.shape[0]) < density
    new_edges = np.column_stack([chosen[ii[keep]], chosen[jj[keep]]])
    is_fraud = graph.is_fraud.copy()
    is_fraud[chosen] = True
    return LabeledGraph.from_edges(
        graph.vertex_ids, is_fraud, np.concatenate([graph.edges, new_edges]), graph.metadata
    )


# ---------------------------------------------------------------------------
# Transformations and statistics
# ---------------------------------------------------------------------------

def truncate_by_degree(graph: LabeledGraph, D: float) -> LabeledGraph:
    """Delete benign vertices whose input degree exceeds ``D``.

    Single pass on input-graph degrees; fraud vertices are never removed.
    """
    if D < 0:
        raise ValueError("degree threshold must be nonnegative")
    keep = graph.is_fraud | (graph.degrees <= D)
    if keep.all():
        return graph
    return graph.induced_subgraph(np.flatnonzero(keep))


def triangles_per_vertex(graph: LabeledGraph) -> np.ndarray:
    A = graph.adjacency
    return np.asarray((A @ A).multiply(A).sum(axis=1)).ravel() // 2


def compute_stats(graph: LabeledGraph) -> GraphStats:
    """Exact block edge counts, benign degree sequence and triangle count."""
    f = graph.is_fraud
    e = graph.edges
    fa, fb = f[e[:, 0]], f[e[:, 1]]
    n_ff = int(np.sum(fa & fb))
    n_bb = int(np.sum(~fa & ~fb))
    n_bf = graph.n_edges - n_ff - n_bb
    tri = int(triangles_per_vertex(graph).sum() // 3) if graph.n_edges else 0
    deg = graph.degrees
    return GraphStats(
        edge_count_bb=n_bb,
        edge_count_bf=n_bf,
        edge_count_ff=n_ff,
        degree_sequence_benign=_frozen(deg[~f].copy()),
        triangle_count=tri,
        max_degree=int(deg.max()) if deg.size else 0,
    )


def graph_from_pairs(
    pairs: Iterable[tuple[str, str]], fraud: Iterable[str], vertices: Iterable[str] | None = None
) -> LabeledGraph:
    """Convenience constructor from id pairs, used mostly in tests and demos."""
    pairs = list(pairs)
    fraud = set(fraud)
    if vertices is None:
        seen: dict[str, None] = {}
        for u, v in pairs:
            seen.setdefault(u)
            seen.setdefault(v)
        for v in sorted(fraud):
            seen.setdefault(v)
        vertices = list(seen)
    vertices = list(vertices)
    idx = {v: i for i, v in enumerate(vertices)}
    edges = [(idx[u], idx[v]) for u, v in pairs]
    return LabeledGraph.from_edges(vertices, [v in fraud for v in vertices], edges)


def n_choose_2(n: int) -> int:
    return n * (n - 1) // 2 if n > 1 else 0


__all__ = [
    "GraphFormatError",
    "GraphStats",
    "LabeledGraph",
    "SbmParams",
    "compute_stats",
    "graph_from_pairs",
    "inject_fraud_clique",
    "load_graph",
    "n_choose_2",
    "sample_sbm",
    "truncate_by_degree",
    "write_graph",
]
