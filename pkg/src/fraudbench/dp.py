"""Noise primitives, sensitivity bounds, budget accounting and private selection."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from .graph import LabeledGraph

DEFAULT_DELTA = 1e-8

# Relative slack when comparing cumulative epsilon against the allotment, so
# that e.g. ten charges of eps/10 exhaust eps despite float rounding.
LEDGER_RTOL = 1e-9


class BudgetExceededError(RuntimeError):
    """A charge would push cumulative epsilon past the ledger allotment."""


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError("delta must lie in [0, 1)")


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Accept an int, None or an existing SeedSequence."""
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


# ---------------------------------------------------------------------------
# Laplace noise
# ---------------------------------------------------------------------------

def sample_laplace(scale: float, rng: np.random.Generator, size=None):
    """Draw Laplace(0, scale) by inverting the CDF of a uniform draw."""
    if not scale > 0:
        raise ValueError(f"Laplace scale must be positive, got {scale}")
    u = rng.random(size) - 0.5  # [-0.5, 0.5)
    tail = np.maximum(1.0 - 2.0 * np.abs(u), np.finfo(float).tiny)
    x = -scale * np.sign(u) * np.log(tail)
    return float(x) if size is None else x


def laplace_mechanism(value, sensitivity: float, epsilon: float, rng: np.random.Generator):
    """Release ``value + Laplace(sensitivity / epsilon)``.

    Works elementwise on arrays. Zero sensitivity or infinite epsilon returns
    the value untouched and consumes no randomness.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if sensitivity < 0:
        raise ValueError("sensitivity must be nonnegative")
    scale = sensitivity / epsilon
    if scale == 0:
        return value
    if np.ndim(value) == 0:
        return float(value) + sample_laplace(scale, rng)
    value = np.asarray(value, dtype=float)
    return value + sample_laplace(scale, rng, size=value.shape)


def laplace_difference_cdf(d: float, scale: float) -> float:
    """P(X - Y <= d) for independent X, Y ~ Laplace(0, scale)."""
    z = abs(d) / scale
    upper = 1.0 - 0.5 * math.exp(-z) * (1.0 + z / 2.0)
    return upper if d >= 0 else 1.0 - upper


# ---------------------------------------------------------------------------
# Sensitivity
# ---------------------------------------------------------------------------

def beta_from_privacy(epsilon: float, delta: float) -> float:
    """Smoothing parameter ``eps / (2 ln(1 / (2 delta)))`` for Laplace noise."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    return epsilon / (2.0 * math.log(1.0 / (2.0 * delta)))


def smooth_sensitivity_truncation(graph: LabeledGraph, D: float, beta: float) -> float:
    """beta-smooth sensitivity of benign degree truncation at threshold ``D``.

    Maximizes ``exp(-beta t) * (1 + t + N_t)`` over ``t = 0..n_B`` where
    ``N_t`` counts benign vertices with degree in ``[D - t, D + t + 1]``.
    Scanning stops once ``exp(-beta t) * (1 + t + n_B)`` cannot beat the best
    value so far.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    if D < 0:
        raise ValueError("D must be nonnegative")
    deg = np.sort(graph.degrees[~graph.is_fraud])
    n_b = deg.shape[0]
    best = 0.0
    for t in range(n_b + 1):
        decay = math.exp(-beta * t)
        if decay * (1 + t + n_b) <= best:
            break
        lo = np.searchsorted(deg, D - t, side="left")
        hi = np.searchsorted(deg, D + t + 1, side="right")
        best = max(best, decay * (1 + t + int(hi - lo)))
    return best


def _rs_linear(D: float) -> float:
    return float(D)


RESTRICTED_SENSITIVITY: dict[str, Callable[[float], float]] = {
    "edge_count": _rs_linear,
    "edge_count_bb": _rs_linear,
    "edge_count_bf": _rs_linear,
    "degree_sequence": lambda D: 3.0 * D,
    "triangle_count": lambda D: float(D) * (D - 1) if D >= 1 else 0.0,
    "adjacency": lambda D: 2.0 * D,
}


def restricted_sensitivity(statistic: str, D: float) -> float:
    """L1 sensitivity of ``statistic`` to rewiring one benign vertex, all degrees <= D.

    Edge counts change by at most D. The benign degree sequence moves by the
    vertex's own degree plus one per old and new neighbour, bounded by 3D.
    Triangles through the vertex number at most C(D, 2) before and after,
    and the adjacency upper triangle changes in at most 2D entries.
    """
    try:
        fn = RESTRICTED_SENSITIVITY[statistic]
    except KeyError:
        raise KeyError(f"no sensitivity registered for {statistic!r}") from None
    if D < 0:
        raise ValueError("D must be nonnegative")
    return fn(D)


# ---------------------------------------------------------------------------
# Accounting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LedgerEntry:
    label: str
    epsilon: float
    delta: float = 0.0


@dataclass(frozen=True)
class BudgetLedger:
    """Append-only record of privacy charges against a fixed epsilon allotment.

    The ledger is a value: :meth:`charge` returns a new ledger.
    """

    total_epsilon: float
    entries: tuple[LedgerEntry, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.total_epsilon > 0:
            raise ValueError("allotment must be positive")

    @property
    def spent_epsilon(self) -> float:
        return math.fsum(e.epsilon for e in self.entries)

    @property
    def spent_delta(self) -> float:
        return math.fsum(e.delta for e in self.entries)

    @property
    def remaining(self) -> float:
        return max(0.0, self.total_epsilon - self.spent_epsilon)

    def can_charge(self, epsilon: float) -> bool:
        limit = self.total_epsilon * (1.0 + LEDGER_RTOL)
        return math.fsum([self.spent_epsilon, epsilon]) <= limit

    def charge(self, label: str, epsilon: float, delta: float = 0.0) -> "BudgetLedger":
        if not epsilon > 0:
            raise ValueError("charges must be positive")
        if delta < 0:
            raise ValueError("delta charge must be nonnegative")
        if not self.can_charge(epsilon):
            raise BudgetExceededError(
                f"charge {epsilon:g} for {label!r} exceeds remaining budget {self.remaining:g}"
            )
        return replace(self, entries=self.entries + (LedgerEntry(label, float(epsilon), float(delta)),))

    def to_dict(self) -> dict:
        return {
            "total_epsilon": self.total_epsilon,
            "spent_epsilon": self.spent_epsilon,
            "spent_delta": self.spent_delta,
            "entries": [
                {"label": e.label, "epsilon": e.epsilon, "delta": e.delta} for e in self.entries
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: Mapping) -> "BudgetLedger":
        entries = tuple(LedgerEntry(e["label"], e["epsilon"], e.get("delta", 0.0)) for e in d["entries"])
        return cls(d["total_epsilon"], entries)


def accountant_charge(ledger: BudgetLedger, label: str, epsilon: float, delta: float = 0.0) -> BudgetLedger:
    return ledger.charge(label, epsilon, delta)


# ---------------------------------------------------------------------------
# Selection
# ---------------------------------------------------------------------------

def report_noisy_argmax(values: Mapping[str, float], scale: float, rng: np.random.Generator) -> str:
    """Name of the largest value after adding independent Laplace(scale) noise.

    The noisy values are not returned. Ties go to the lexicographically
    smallest name.
    """
    if not values:
        raise ValueError("no values to select from")
    if scale < 0:
        raise ValueError("scale must be nonnegative")
    names = sorted(values)
    v = np.array([values[k] for k in names], dtype=float)
    if scale > 0:
        v = v + sample_laplace(scale, rng, size=v.shape[0])
    return names[int(np.argmax(v))]  # argmax returns the first maximum
