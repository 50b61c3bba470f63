"""Detector accuracy statistics and release-error metrics.

AUC here is the strict pairwise statistic: a fraud/benign pair counts only
when the fraud score is strictly larger, ties contribute nothing. This is
*not* the usual half-credit ROC area; ``auc(s) + auc(-s) < 1`` whenever a
fraud and a benign vertex share a score.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .graph import LabeledGraph


def _split_scores(scores, graph: LabeledGraph) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=float)
    if s.shape != (graph.n,):
        raise ValueError(f"expected {graph.n} scores, got shape {s.shape}")
    return s[graph.is_fraud], s[~graph.is_fraud]


def strict_pair_count(fraud_scores: np.ndarray, benign_scores: np.ndarray) -> int:
    """Number of (fraud, benign) pairs with fraud score strictly greater."""
    b = np.sort(benign_scores)
    return int(np.searchsorted(b, fraud_scores, side="left").sum())


def auc(scores, graph: LabeledGraph) -> float:
    f, b = _split_scores(scores, graph)
    if f.size == 0 or b.size == 0:
        raise ValueError("AUC needs at least one fraud and one benign vertex")
    return strict_pair_count(f, b) / (f.size * b.size)


def f1_best_threshold(scores, graph: LabeledGraph) -> float:
    """Best F1 over thresholds "predict fraud iff score >= t" at observed scores."""
    s = np.asarray(scores, dtype=float)
    if s.shape != (graph.n,):
        raise ValueError(f"expected {graph.n} scores, got shape {s.shape}")
    n_f = graph.n_fraud
    if n_f == 0:
        raise ValueError("F1 is undefined without fraud vertices")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    fraud_sorted = graph.is_fraud[order]
    tp = np.cumsum(fraud_sorted)
    fp = np.cumsum(~fraud_sorted)
    # last position of each run of equal scores = threshold at that score
    last = np.r_[s_sorted[1:] != s_sorted[:-1], True]
    tp, fp = tp[last], fp[last]
    fn = n_f - tp
    f1 = 2 * tp / (2 * tp + fp + fn)
    return float(f1.max())


def l1_error(true_value, noisy_value):
    """``|true - noisy|``, elementwise for arrays."""
    diff = np.abs(np.asarray(true_value, dtype=float) - np.asarray(noisy_value, dtype=float))
    return float(diff) if diff.ndim == 0 else diff


def top1_error(true_aucs: Mapping[str, float], released_best: str) -> float:
    if released_best not in true_aucs:
        raise KeyError(f"unknown detector {released_best!r}")
    return max(true_aucs.values()) - true_aucs[released_best]


@dataclass(frozen=True)
class Leaderboard:
    """Detectors sorted by value, descending; ties broken by name."""

    entries: tuple[tuple[str, float], ...]
    noisy: bool = False

    @classmethod
    def from_values(cls, values: Mapping[str, float], noisy: bool = False) -> "Leaderboard":
        for name, v in values.items():
            if not np.isfinite(v):
                raise ValueError(f"non-finite value for {name!r}")
        ordered = sorted(values.items(), key=lambda kv: (-kv[1], kv[0]))
        return cls(tuple((k, float(v)) for k, v in ordered), noisy)

    @property
    def names(self) -> list[str]:
        return [k for k, _ in self.entries]

    def rank(self) -> dict[str, int]:
        return {k: i for i, (k, _) in enumerate(self.entries)}

    def as_dict(self) -> dict[str, float]:
        return dict(self.entries)


def weighted_kendall_tau(true_aucs: Mapping[str, float], noisy_ranking: Leaderboard | Sequence[str]) -> float:
    """Inversions between the true and released rankings, weighted by true AUC gap."""
    order = noisy_ranking.names if isinstance(noisy_ranking, Leaderboard) else list(noisy_ranking)
    if set(order) != set(true_aucs) or len(order) != len(true_aucs):
        raise ValueError("leaderboards cover different detector sets")
    true_order = Leaderboard.from_values(true_aucs).names
    noisy_rank = {k: i for i, k in enumerate(order)}
    total = 0.0
    for a in range(len(true_order)):
        for b in range(a + 1, len(true_order)):
            i, j = true_order[a], true_order[b]
            if noisy_rank[i] > noisy_rank[j]:
                total += true_aucs[i] - true_aucs[j]
    return total


def random_permutation_baseline(true_aucs: Mapping[str, float]) -> float:
    """Expected weighted Kendall-Tau distance of a uniformly random ranking."""
    if len(true_aucs) < 2:
        raise ValueError("need at least two detectors")
    a = np.sort(np.fromiter(true_aucs.values(), dtype=float))[::-1]
    n = a.shape[0]
    # each gap between neighbours in sorted order lies inside (k+1)(n-k-1) pairs;
    # summing nonnegative gaps keeps tied values at exactly zero
    k = np.arange(n - 1)
    return 0.5 * float(np.dot(a[:-1] - a[1:], (k + 1) * (n - k - 1)))


ACCURACY_FUNCTIONS = {"auc": auc, "f1": f1_best_threshold}
