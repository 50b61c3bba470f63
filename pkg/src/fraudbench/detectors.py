"""Deterministic fraud detectors.

A detector is described by a :class:`DetectorSpec` and evaluated with
:func:`score`, which returns one real score per vertex (higher = more
suspicious). Scoring functions are looked up by ``spec.kind`` in a registry;
:func:`register_detector` adds new kinds and :data:`COMMUNITY_METHODS` holds
the community-detection backends used by ``community_size``.
"""

from __future__ import annotations

import logging
import math
import weakref
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
from scipy.sparse.linalg import svds

from .graph import LabeledGraph, triangles_per_vertex

log = logging.getLogger(__name__)

KINDS = (
    "neg_degree",
    "degree",
    "neg_clustering",
    "svd_error_sum",
    "svd_error_max",
    "community_size",
    "aggregate",
    "random",
    "metadata_linear",
    "attack",
)


@dataclass(frozen=True)
class DetectorSpec:
    """Name plus kind-specific parameters of a detector.

    ``rank`` is used by the SVD kinds, ``seed`` by ``random`` (and as the
    tie-break seed of ``degree``), ``weights`` by ``aggregate`` and
    ``metadata_linear``, ``children`` by ``aggregate`` and ``attack``,
    ``combine`` selects ``"mean"`` or ``"max"`` aggregation, ``method`` picks a
    community-detection backend, and ``query`` is the attack predicate.
    """

    name: str
    kind: str
    rank: int | None = None
    seed: int | None = None
    weights: tuple[float, ...] | None = None
    children: tuple["DetectorSpec", ...] = ()
    combine: str = "mean"
    method: str = "label_propagation"
    query: Any = None

    def __post_init__(self):
        if self.kind not in _REGISTRY and self.kind not in KINDS:
            raise ValueError(f"unknown detector kind {self.kind!r}")
        if self.kind in ("svd_error_sum", "svd_error_max"):
            if self.rank is None or self.rank < 1:
                raise ValueError("SVD detectors need rank >= 1")
        if self.kind == "aggregate":
            if not self.children:
                raise ValueError("aggregate needs at least one child")
            if self.combine not in ("mean", "max"):
                raise ValueError("combine must be 'mean' or 'max'")
            if self.combine == "mean":
                w = self.weights if self.weights is not None else (1.0,) * len(self.children)
                if len(w) != len(self.children):
                    raise ValueError("one weight per child is required")
                if not all(math.isfinite(x) and x >= 0 for x in w) or sum(w) <= 0:
                    raise ValueError("aggregate weights must be finite, nonnegative, not all zero")
        if self.kind == "metadata_linear":
            if self.weights is None or not all(math.isfinite(x) for x in self.weights):
                raise ValueError("metadata_linear needs a finite weight vector")
        if self.kind == "random" and self.seed is None:
            raise ValueError("random detector needs its own seed")
        if self.kind == "attack":
            if len(self.children) != 2 or self.query is None:
                raise ValueError("attack detector needs (accurate, inaccurate) children and a query")


ScoreFn = Callable[[DetectorSpec, LabeledGraph], np.ndarray]
_REGISTRY: dict[str, ScoreFn] = {}


def register_detector(kind: str):
    def deco(fn: ScoreFn) -> ScoreFn:
        _REGISTRY[kind] = fn
        return fn

    return deco


# Scores are deterministic in (spec, graph), so composites that share children
# (and suites scored on one graph) reuse them. Entries die with the graph.
_SCORE_CACHE: "weakref.WeakKeyDictionary[LabeledGraph, dict]" = weakref.WeakKeyDictionary()


def score(spec: DetectorSpec, graph: LabeledGraph) -> np.ndarray:
    """Per-vertex fraud scores of ``spec`` on ``graph`` (read-only array)."""
    if graph.n == 0:
        raise ValueError("cannot score an empty graph")
    memo = _SCORE_CACHE.setdefault(graph, {})
    try:
        hit = memo.get(spec)
    except TypeError:  # unhashable parameters
        memo, hit = None, None
    if hit is not None:
        return hit
    out = np.array(_REGISTRY[spec.kind](spec, graph), dtype=float)
    if out.shape != (graph.n,) or not np.isfinite(out).all():
        raise RuntimeError(f"detector {spec.name!r} produced invalid scores")
    out.setflags(write=False)
    if memo is not None:
        memo[spec] = out
    return out


# ---------------------------------------------------------------------------
# Structural detectors
# ---------------------------------------------------------------------------

@register_detector("neg_degree")
def _neg_degree(spec, graph):
    return -graph.degrees.astype(float)


@register_detector("degree")
def _degree(spec, graph):
    s = graph.degrees.astype(float)
    if spec.seed is not None:
        # jitter below 1 keeps the degree order and breaks ties at random
        s = s + 0.5 * np.random.default_rng(spec.seed).random(graph.n)
    return s


def local_clustering(graph: LabeledGraph) -> np.ndarray:
    deg = graph.degrees.astype(float)
    tri = triangles_per_vertex(graph).astype(float) if graph.n_edges else np.zeros(graph.n)
    pairs = deg * (deg - 1) / 2
    return np.divide(tri, pairs, out=np.zeros(graph.n), where=deg >= 2)


@register_detector("neg_clustering")
def _neg_clustering(spec, graph):
    return -local_clustering(graph)


def svd_edge_errors(graph: LabeledGraph, rank: int) -> tuple[np.ndarray, np.ndarray]:
    """Absolute rank-``rank`` reconstruction error at both orientations of each edge.

    Returns ``(err_ij, err_ji)`` aligned with ``graph.edges``.
    """
    n = graph.n
    if rank > n:
        raise ValueError(f"rank {rank} exceeds matrix dimension {n}")
    if graph.n_edges == 0:
        z = np.zeros(0)
        return z, z
    A = graph.adjacency.astype(float)
    if n <= 1500 or rank >= n // 2:
        U, s, Vt = np.linalg.svd(A.toarray())
        U, s, Vt = U[:, :rank], s[:rank], Vt[:rank]
    else:
        U, s, Vt = svds(A, k=rank, v0=np.full(n, 1.0 / math.sqrt(n)))
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    US = U * s
    a_ij = np.einsum("er,er->e", US[i], Vt[:, j].T)
    a_ji = np.einsum("er,er->e", US[j], Vt[:, i].T)
    return np.abs(1.0 - a_ij), np.abs(1.0 - a_ji)


def _svd_scores(graph, rank, reduce):
    err_ij, err_ji = svd_edge_errors(graph, rank)
    rows = np.r_[graph.edges[:, 0], graph.edges[:, 1]]
    errs = np.r_[err_ij, err_ji]
    out = np.zeros(graph.n)
    if reduce == "sum":
        np.add.at(out, rows, errs)
    else:
        np.maximum.at(out, rows, errs)
    return out


@register_detector("svd_error_sum")
def _svd_sum(spec, graph):
    return _svd_scores(graph, spec.rank, "sum")


@register_detector("svd_error_max")
def _svd_max(spec, graph):
    return _svd_scores(graph, spec.rank, "max")


def label_propagation(graph: LabeledGraph, max_iter: int = 100) -> np.ndarray:
    """Synchronous label propagation; ties go to the largest label.

    Every vertex starts in its own community; isolated vertices stay alone.
    Stops at a fixed point or after ``max_iter`` rounds.
    """
    n = graph.n
    labels = np.arange(n, dtype=np.int64)
    e = graph.edges
    if e.shape[0] == 0:
        return labels
    src = np.r_[e[:, 0], e[:, 1]]
    dst = np.r_[e[:, 1], e[:, 0]]
    for _ in range(max_iter):
        keys, counts = np.unique(src * n + labels[dst], return_counts=True)
        v, lab = keys // n, keys % n
        order = np.lexsort((lab, counts, v))
        v_sorted = v[order]
        last = np.r_[v_sorted[1:] != v_sorted[:-1], True]
        new = labels.copy()
        new[v_sorted[last]] = lab[order][last]
        if np.array_equal(new, labels):
            break
        labels = new
    return labels


COMMUNITY_METHODS: dict[str, Callable[[LabeledGraph], np.ndarray]] = {
    "label_propagation": label_propagation,
}


@register_detector("community_size")
def _community_size(spec, graph):
    labels = COMMUNITY_METHODS[spec.method](graph)
    _, inverse, counts = np.unique(labels, return_inverse=True, return_counts=True)
    return -counts[inverse].astype(float)


# ---------------------------------------------------------------------------
# Composite and test-support detectors
# ---------------------------------------------------------------------------

def minmax_normalize(s: np.ndarray) -> np.ndarray:
    lo, hi = s.min(), s.max()
    if hi == lo:
        return np.full_like(s, 0.5, dtype=float)
    return (s - lo) / (hi - lo)


@register_detector("aggregate")
def _aggregate(spec, graph):
    parts = np.vstack([minmax_normalize(score(c, graph)) for c in spec.children])
    if spec.combine == "max":
        return parts.max(axis=0)
    w = np.asarray(spec.weights if spec.weights is not None else [1.0] * len(spec.children))
    return (w @ parts) / w.sum()


@register_detector("random")
def _random(spec, graph):
    return np.random.default_rng(spec.seed).random(graph.n)


@register_detector("metadata_linear")
def _metadata_linear(spec, graph):
    if graph.metadata is None:
        raise ValueError("graph has no vertex metadata")
    w = np.asarray(spec.weights, dtype=float)
    if w.shape[0] != graph.metadata.shape[1]:
        raise ValueError("weight vector does not match metadata dimension")
    return graph.metadata @ w


@register_detector("attack")
def _attack(spec, graph):
    accurate, inaccurate = spec.children
    chosen = accurate if spec.query.evaluate(graph) else inaccurate
    return score(chosen, graph)


# ---------------------------------------------------------------------------
# Built-in suite
# ---------------------------------------------------------------------------

def builtin_suite(svd_sum_rank: int = 10, svd_max_rank: int = 50, random_seed: int = 0) -> list[DetectorSpec]:
    """The ten non-learning detectors used for leaderboard experiments."""
    deg = DetectorSpec("neg_degree", "neg_degree")
    clust = DetectorSpec("neg_clustering", "neg_clustering")
    svd_sum = DetectorSpec("svd_error_sum", "svd_error_sum", rank=svd_sum_rank)
    svd_max = DetectorSpec("svd_error_max", "svd_error_max", rank=svd_max_rank)
    comm = DetectorSpec("community_size", "community_size")
    return [
        deg,
        clust,
        svd_sum,
        svd_max,
        comm,
        DetectorSpec("agg_mean_degree_clustering", "aggregate", children=(deg, clust), weights=(0.5, 0.5)),
        DetectorSpec(
            "agg_mean_svd_community", "aggregate", children=(svd_sum, svd_max, comm), weights=(0.5, 0.25, 0.25)
        ),
        DetectorSpec("agg_max_degree_svd", "aggregate", children=(deg, svd_sum), combine="max"),
        DetectorSpec("agg_max_clustering_svd_community", "aggregate", children=(clust, svd_max, comm), combine="max"),
        DetectorSpec("random", "random", seed=random_seed),
    ]
