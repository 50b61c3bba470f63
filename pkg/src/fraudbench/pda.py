"""Partition-Duplicate-Aggregate release and its SBM bias model.

Benign vertices are split into ``k`` disjoint parts; each part is joined by an
independently sampled subset of ``round(rho * n_F)`` fraud vertices. The
detector's accuracy is averaged over the induced subgraphs and released with
Laplace noise of scale ``1 / (k * epsilon)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.stats import norm

from . import detectors as det
from .dp import BudgetExceededError, BudgetLedger, as_seed_sequence, laplace_mechanism
from .graph import LabeledGraph, SbmParams, sample_sbm
from .metrics import auc

AccuracyFn = Callable[[np.ndarray, LabeledGraph], float]


@dataclass(frozen=True)
class PdaConfig:
    k: int
    rho: float
    epsilon: float = 1.0
    noise_enabled: bool = True

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("need at least two partitions")
        if not 0.0 < self.rho <= 1.0:
            raise ValueError("rho must lie in (0, 1]")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    def fraud_subset_size(self, n_fraud: int) -> int:
        if n_fraud == 0:
            return 0
        return max(1, int(math.floor(self.rho * n_fraud + 0.5)))

    @property
    def noise_scale(self) -> float:
        return 1.0 / (self.k * self.epsilon)


@dataclass(frozen=True)
class PdaRelease:
    value: float
    partition_mean: float
    partition_values: tuple[float, ...]
    epsilon_charged: float
    noise_scale: float
    seed: int | None


def partition_indices(graph: LabeledGraph, config: PdaConfig, rng: np.random.Generator) -> list[np.ndarray]:
    """Vertex index sets of the ``k`` partitions (benign block, then fraud sample)."""
    n_b = graph.n_benign
    if config.k > n_b:
        raise ValueError(f"k={config.k} exceeds benign count {n_b}")
    benign = rng.permutation(graph.benign_indices)
    base, extra = divmod(n_b, config.k)
    sizes = [base + (1 if i < extra else 0) for i in range(config.k)]
    bounds = np.cumsum([0] + sizes)
    m = config.fraud_subset_size(graph.n_fraud)
    parts = []
    for i in range(config.k):
        fraud = rng.choice(graph.fraud_indices, size=m, replace=False) if m else np.empty(0, dtype=np.int64)
        parts.append(np.concatenate([np.sort(benign[bounds[i]:bounds[i + 1]]), np.sort(fraud)]))
    return parts


def partition_duplicate(graph: LabeledGraph, config: PdaConfig, seed) -> list[LabeledGraph]:
    rng = np.random.default_rng(seed)
    return [graph.induced_subgraph(ix) for ix in partition_indices(graph, config, rng)]


def partition_values(
    detector: det.DetectorSpec,
    parts: Sequence[LabeledGraph],
    accuracy_fn: AccuracyFn = auc,
) -> list[float]:
    return [accuracy_fn(det.score(detector, g), g) for g in parts]


def pda_release(
    detector: det.DetectorSpec,
    graph: LabeledGraph,
    config: PdaConfig,
    accuracy_fn: AccuracyFn = auc,
    ledger: BudgetLedger | None = None,
    seed=None,
    parts: Sequence[LabeledGraph] | None = None,
) -> tuple[PdaRelease, BudgetLedger | None]:
    """Release the partition-mean accuracy of ``detector``, noised when enabled.

    ``accuracy_fn`` must have range 1 (AUC or F1). The budget is checked
    before any partition is scored; ``epsilon`` is charged only when noise is
    on. Precomputed ``parts`` may be passed to reuse one partitioning across
    detectors. Returns the release and the updated ledger.
    """
    if config.noise_enabled and ledger is not None and not ledger.can_charge(config.epsilon):
        raise BudgetExceededError(
            f"pda release of {detector.name!r} needs {config.epsilon:g}, {ledger.remaining:g} left"
        )
    seq = as_seed_sequence(seed)
    part_seq, noise_seq = seq.spawn(2)
    if parts is None:
        parts = partition_duplicate(graph, config, part_seq)
    vals = partition_values(detector, parts, accuracy_fn)
    mean = float(np.mean(vals))
    charged = 0.0
    value = mean
    if config.noise_enabled:
        value = laplace_mechanism(mean, 1.0 / config.k, config.epsilon, np.random.default_rng(noise_seq))
        charged = config.epsilon
        if ledger is not None:
            ledger = ledger.charge(f"pda:{detector.name}", config.epsilon)
    recorded = int(seed) if isinstance(seed, (int, np.integer)) else None
    return PdaRelease(value, mean, tuple(vals), charged, config.noise_scale, recorded), ledger


# ---------------------------------------------------------------------------
# SBM bias model
# ---------------------------------------------------------------------------

def degree_gap_moments(params: SbmParams) -> tuple[float, float]:
    """Mean and standard deviation of (fraud degree - benign degree), no cross edges."""
    nf, nb = params.n_fraud, params.n_benign
    pf, pb = params.p_fraud, params.p_benign
    mean = (nf - 1) * pf - (nb - 1) * pb
    var = (nf - 1) * pf * (1 - pf) + (nb - 1) * pb * (1 - pb)
    return mean, math.sqrt(var)


def expected_auc_sbm_degree(params: SbmParams) -> float:
    """Normal approximation to the degree detector's expected AUC on an SBM."""
    mean, sd = degree_gap_moments(params)
    if sd == 0:
        raise ValueError("degree difference has zero variance")
    return float(norm.cdf(mean / sd))


DEGREE_DETECTOR = det.DetectorSpec("degree", "degree")


@dataclass(frozen=True)
class BiasRow:
    rho: float
    mean_bias: float
    std_err: float
    n_trials: int


def bias_simulation(
    params: SbmParams,
    k: int,
    rho_grid: Sequence[float],
    trials: int,
    seed=0,
    detector: det.DetectorSpec = DEGREE_DETECTOR,
    accuracy_fn: AccuracyFn = auc,
) -> list[BiasRow]:
    """Noise-free PDA bias of ``detector`` on SBM graphs across fraud rates.

    Each trial samples one graph and reuses it for every ``rho``, so the
    curve is compared on common graphs.
    """
    root = as_seed_sequence(seed)
    biases = np.zeros((trials, len(rho_grid)))
    for t, trial_seq in enumerate(root.spawn(trials)):
        graph_seq, *rho_seqs = trial_seq.spawn(1 + len(rho_grid))
        g = sample_sbm(params, graph_seq)
        full = accuracy_fn(det.score(detector, g), g)
        for r, (rho, s) in enumerate(zip(rho_grid, rho_seqs)):
            cfg = PdaConfig(k=k, rho=rho, noise_enabled=False)
            parts = partition_duplicate(g, cfg, s)
            biases[t, r] = np.mean(partition_values(detector, parts, accuracy_fn)) - full
    sem = biases.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.full(len(rho_grid), np.nan)
    return [
        BiasRow(float(rho), float(biases[:, r].mean()), float(sem[r]), trials) for r, rho in enumerate(rho_grid)
    ]


def zero_crossing(rows: Sequence[BiasRow]) -> float | None:
    """First rho where mean bias changes sign, by linear interpolation."""
    rows = sorted(rows, key=lambda r: r.rho)
    for a, b in zip(rows, rows[1:]):
        if a.mean_bias == 0:
            return a.rho
        if (a.mean_bias < 0) != (b.mean_bias < 0):
            w = a.mean_bias / (a.mean_bias - b.mean_bias)
            return a.rho + w * (b.rho - a.rho)
    if rows and rows[-1].mean_bias == 0:
        return rows[-1].rho
    return None
