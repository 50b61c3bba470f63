"""Accuracy-encoding attack on benchmark servers.

The attacker submits a detector that checks a private predicate of the graph
(an edge or a vertex is present) and behaves like a good detector when the
predicate holds and like a coin flip otherwise. The released accuracy then
leaks the predicate unless the server adds enough noise.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .detectors import DetectorSpec, score
from .dp import DEFAULT_DELTA, as_seed_sequence
from .graph import LabeledGraph, SbmParams, sample_sbm
from .metrics import auc
from .pda import PdaConfig, pda_release
from .synth import SynthMethod, generate_synthetic

log = logging.getLogger(__name__)


class Query(Protocol):
    def evaluate(self, graph: LabeledGraph) -> bool: ...


@dataclass(frozen=True)
class EdgeQuery:
    u: str
    v: str

    def __post_init__(self):
        if self.u == self.v:
            raise ValueError("edge query needs two distinct vertices")

    def evaluate(self, graph: LabeledGraph) -> bool:
        idx = graph.index_of
        missing = [x for x in (self.u, self.v) if x not in idx]
        if missing:
            log.debug("edge query references absent vertices %s; evaluating false", missing)
            return False
        return graph.has_edge(self.u, self.v)


@dataclass(frozen=True)
class VertexQuery:
    vertex: str

    def evaluate(self, graph: LabeledGraph) -> bool:
        return self.vertex in graph.index_of


RANDOM_DETECTOR = DetectorSpec("random", "random", seed=0)


@dataclass(frozen=True)
class AttackSpec:
    accurate: DetectorSpec
    query: EdgeQuery | VertexQuery
    inaccurate: DetectorSpec = RANDOM_DETECTOR
    threshold: float = 0.75

    def __post_init__(self):
        if self.accurate == self.inaccurate:
            raise ValueError("accurate and inaccurate detectors must differ")


def make_attack_detector(spec: AttackSpec) -> DetectorSpec:
    """Composite detector that branches on ``spec.query``."""
    return DetectorSpec(
        name=f"attack[{spec.accurate.name}|{spec.inaccurate.name}]",
        kind="attack",
        children=(spec.accurate, spec.inaccurate),
        query=spec.query,
    )


@dataclass(frozen=True)
class SbmEdgeFamily:
    """SBM graphs with the edge ``(u, v)`` forced present or absent.

    For a given seed the two variants differ only in that edge.
    """

    params: SbmParams
    u: str = "b0"
    v: str = "b1"

    def sample(self, truth: bool, seed) -> LabeledGraph:
        g = sample_sbm(self.params, seed)
        idx = g.index_of
        i, j = sorted((idx[self.u], idx[self.v]))
        e = g.edges
        e = e[~((e[:, 0] == i) & (e[:, 1] == j))]
        if truth:
            e = np.concatenate([e, [[i, j]]])
        return g.with_edges(e)

    @property
    def query(self) -> EdgeQuery:
        return EdgeQuery(self.u, self.v)


# ---------------------------------------------------------------------------
# Servers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExactServer:
    name: str = "exact"

    def release(self, detector: DetectorSpec, graph: LabeledGraph, seed=None) -> float:
        return auc(score(detector, graph), graph)


@dataclass(frozen=True)
class PdaServer:
    k: int
    rho: float
    epsilon: float
    name: str = "pda"

    def __post_init__(self):
        PdaConfig(self.k, self.rho, self.epsilon)  # validates

    def release(self, detector: DetectorSpec, graph: LabeledGraph, seed=None) -> float:
        rel, _ = pda_release(detector, graph, PdaConfig(self.k, self.rho, self.epsilon), seed=seed)
        return rel.value


@dataclass(frozen=True)
class SynthServer:
    method: str
    epsilon: float
    delta: float = DEFAULT_DELTA
    d_multiplier: float = 1.0
    name: str = "synth"

    def __post_init__(self):
        SynthMethod(self.method, self.d_multiplier)
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")

    def release(self, detector: DetectorSpec, graph: LabeledGraph, seed=None) -> float:
        synth, _ = generate_synthetic(
            graph, SynthMethod(self.method, self.d_multiplier), self.epsilon, self.delta, seed=seed
        )
        return auc(score(detector, synth), synth)


@dataclass(frozen=True)
class AttackTrial:
    truth: bool
    value: float


def run_attack_trials(
    server,
    family: SbmEdgeFamily,
    spec: AttackSpec,
    n_positive: int,
    n_negative: int,
    seed=0,
) -> list[AttackTrial]:
    """Query ``server`` once per trial with the attack detector.

    Positives come first. Each trial draws its own graph and server seed.
    """
    if n_positive < 0 or n_negative < 0:
        raise ValueError("trial counts must be nonnegative")
    detector = make_attack_detector(spec)
    truths = [True] * n_positive + [False] * n_negative
    out = []
    for truth, ss in zip(truths, as_seed_sequence(seed).spawn(len(truths))):
        g_seed, s_seed = ss.spawn(2)
        g = family.sample(truth, g_seed)
        out.append(AttackTrial(truth, float(server.release(detector, g, s_seed))))
    return out


# ---------------------------------------------------------------------------
# ROC
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RocResult:
    points: tuple[tuple[float, float, float], ...]
    auc: float

    def tpr_at_fpr(self, max_fpr: float = 0.0) -> float:
        return max(tpr for fpr, tpr, _ in self.points if fpr <= max_fpr + 1e-12)


def roc_curve(trials: Sequence[AttackTrial]) -> RocResult:
    """Threshold sweep (predict positive iff value >= threshold).

    The attack AUC gives half credit to tied positive/negative pairs, the
    usual ROC-area convention, unlike the benchmark AUC in ``metrics``.
    """
    truth = np.array([t.truth for t in trials], dtype=bool)
    vals = np.array([t.value for t in trials], dtype=float)
    pos, neg = vals[truth], vals[~truth]
    if pos.size == 0 or neg.size == 0:
        raise ValueError("ROC needs both positive and negative trials")
    neg_sorted = np.sort(neg)
    below = np.searchsorted(neg_sorted, pos, side="left")
    at_or_below = np.searchsorted(neg_sorted, pos, side="right")
    area = (below.sum() + 0.5 * (at_or_below - below).sum()) / (pos.size * neg.size)

    points = [(0.0, 0.0, math.inf)]
    for thr in np.unique(vals)[::-1]:
        tpr = float(np.mean(pos >= thr))
        fpr = float(np.mean(neg >= thr))
        points.append((fpr, tpr, float(thr)))
    return RocResult(tuple(points), float(area))


def write_roc_csv(result: RocResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fpr", "tpr", "threshold"])
        for fpr, tpr, thr in result.points:
            w.writerow([repr(fpr), repr(tpr), repr(thr)])
