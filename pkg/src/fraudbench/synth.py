"""Node-private synthetic graphs from noisy sufficient statistics.

Pipeline: truncate benign vertices above degree ``D``, compute the smooth
sensitivity ``S`` of that truncation, split epsilon evenly over the
statistics the generator needs and add Laplace noise of scale
``2 * S * RS_D(stat) / eps_share`` to each, then sample a graph from the noisy
statistics. Fraud-only quantities (the fraud-fraud block) are used exactly.

Generators: ``sbm`` (two-block SBM), ``agm`` (Chung-Lu benign block matched to
a noisy degree sequence), ``agm_triangles`` (``agm`` plus a degree-preserving
rewiring pass toward a noisy triangle count) and ``topm_filter`` (noisy
adjacency entries, keep the top noisy edge count).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dp import (
    DEFAULT_DELTA,
    as_seed_sequence,
    beta_from_privacy,
    restricted_sensitivity,
    sample_laplace,
    smooth_sensitivity_truncation,
)
from .graph import (
    LabeledGraph,
    SbmParams,
    _triu_pairs,
    compute_stats,
    n_choose_2,
    sample_sbm,
    truncate_by_degree,
)

METHOD_STATS: dict[str, tuple[str, ...]] = {
    "sbm": ("edge_count_bb", "edge_count_bf"),
    "agm": ("edge_count_bb", "edge_count_bf", "degree_sequence"),
    "agm_triangles": ("edge_count_bb", "edge_count_bf", "degree_sequence", "triangle_count"),
    "topm_filter": ("edge_count", "adjacency"),
}
METHODS = tuple(METHOD_STATS)
D_MULTIPLIERS = (0.5, 1.0)


@dataclass(frozen=True)
class SynthMethod:
    name: str
    d_multiplier: float = 1.0

    def __post_init__(self):
        if self.name not in METHOD_STATS:
            raise ValueError(f"unknown synthetic method {self.name!r}")
        if not self.d_multiplier > 0:
            raise ValueError("truncation multiplier must be positive")

    def threshold(self, graph: LabeledGraph) -> int:
        """Degree cutoff as a multiple of the largest benign degree."""
        deg = graph.degrees[~graph.is_fraud]
        top = int(deg.max()) if deg.size else 0
        return int(math.floor(self.d_multiplier * top))


def _as_method(method) -> SynthMethod:
    return method if isinstance(method, SynthMethod) else SynthMethod(str(method))


@dataclass(frozen=True, eq=False)
class NoisyValue:
    true: float | np.ndarray | None
    noisy: float | np.ndarray | None
    scale: float
    epsilon: float


@dataclass(frozen=True, eq=False)
class NoisyStats:
    """Released statistics for one generator plus the bookkeeping behind them.

    ``vertex_ids`` / ``is_fraud`` describe the graph the statistics were
    computed on (after truncation when noise is on). ``true`` fields are kept
    for error reporting on the server side and are never used by samplers.
    """

    method: str
    values: Mapping[str, NoisyValue]
    edge_count_ff: int
    vertex_ids: tuple[str, ...]
    is_fraud: np.ndarray
    D: float
    S: float
    beta: float
    epsilon: float
    delta: float
    noise_enabled: bool
    n_removed: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def n_fraud(self) -> int:
        return int(self.is_fraud.sum())

    @property
    def n_benign(self) -> int:
        return int((~self.is_fraud).sum())

    def noisy(self, name: str):
        return self.values[name].noisy

    def epsilon_shares(self) -> list[float]:
        return [v.epsilon for v in self.values.values()]


def _split_budget(epsilon: float, k: int) -> list[float]:
    shares = [epsilon / k] * (k - 1)
    # last share absorbs rounding so the shares sum to epsilon
    last = epsilon - math.fsum(shares)
    while math.fsum(shares + [last]) != epsilon:
        last = math.nextafter(last, math.inf if math.fsum(shares + [last]) < epsilon else -math.inf)
    return shares + [last]


def estimate_stats_private(
    graph: LabeledGraph,
    method,
    epsilon: float,
    delta: float = DEFAULT_DELTA,
    D: float | None = None,
    noise_enabled: bool = True,
    rng: np.random.Generator | None = None,
) -> NoisyStats:
    """Noisy sufficient statistics of ``graph`` for the given generator.

    With noise disabled, no truncation, noise or clamping is applied and the
    values equal :func:`compute_stats` on the input graph.
    """
    m = _as_method(method)
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    if D is None:
        D = m.threshold(graph)
    if D < 0:
        raise ValueError("D must be nonnegative")
    rng = rng if rng is not None else np.random.default_rng()

    beta = beta_from_privacy(epsilon, delta)
    S = smooth_sensitivity_truncation(graph, D, beta)
    work = truncate_by_degree(graph, D) if noise_enabled else graph
    st = compute_stats(work)
    names = METHOD_STATS[m.name]
    values: dict[str, NoisyValue] = {}
    for stat, eps_share in zip(names, _split_budget(epsilon, len(names))):
        scale = 2.0 * S * restricted_sensitivity(stat, D) / eps_share if noise_enabled else 0.0
        true = _true_value(st, stat)
        if stat == "adjacency":
            values[stat] = NoisyValue(None, None, scale, eps_share)
            continue
        noisy = true
        if scale > 0:
            if np.ndim(true):
                noisy = true + sample_laplace(scale, rng, size=np.shape(true))
            else:
                noisy = float(true) + sample_laplace(scale, rng)
        if noise_enabled:
            noisy = _clamp(stat, noisy, D, st)
        values[stat] = NoisyValue(true, noisy, scale, eps_share)

    return NoisyStats(
        method=m.name,
        values=values,
        edge_count_ff=st.edge_count_ff,
        vertex_ids=work.vertex_ids,
        is_fraud=work.is_fraud,
        D=D,
        S=S,
        beta=beta,
        epsilon=epsilon,
        delta=delta,
        noise_enabled=noise_enabled,
        n_removed=graph.n - work.n,
    )


def _true_value(st, stat: str):
    if stat == "edge_count":
        return float(st.edge_count)
    if stat == "degree_sequence":
        return st.degree_sequence_benign.astype(float)
    if stat == "adjacency":
        return None
    return float(getattr(st, stat))


def _clamp(stat: str, value, D: float, st):
    if stat == "degree_sequence":
        return np.clip(value, 0.0, D)
    if stat == "edge_count":
        # fraud-fraud edges are exact, so the total cannot fall below them
        return max(float(st.edge_count_ff), float(value))
    return max(0.0, float(value))


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

def _template(stats: NoisyStats, n_fraud: int | None, n_benign: int | None):
    nf, nb = stats.n_fraud, stats.n_benign
    if (n_fraud is not None and n_fraud != nf) or (n_benign is not None and n_benign != nb):
        raise ValueError("block sizes do not match the statistics' vertex set")
    benign_idx = np.flatnonzero(~stats.is_fraud)
    fraud_idx = np.flatnonzero(stats.is_fraud)
    # maps SBM order (benign first, then fraud) onto the template order
    return nb, nf, np.r_[benign_idx, fraud_idx]


def _clip01(x: float) -> float:
    return min(1.0, max(0.0, x))


def fitted_sbm_params(stats: NoisyStats) -> SbmParams:
    nb, nf = stats.n_benign, stats.n_fraud
    if nb == 0 or nf == 0:
        raise ValueError("both blocks must be nonempty")
    pb = _clip01(stats.noisy("edge_count_bb") / n_choose_2(nb)) if nb > 1 else 0.0
    px = _clip01(stats.noisy("edge_count_bf") / (nf * nb))
    pf = _clip01(stats.edge_count_ff / n_choose_2(nf)) if nf > 1 else 0.0
    return SbmParams(n_fraud=nf, n_benign=nb, p_fraud=pf, p_benign=pb, p_cross=px)


def fit_and_sample_sbm(stats: NoisyStats, n_fraud: int | None = None, n_benign: int | None = None, seed=None) -> LabeledGraph:
    """Fit block probabilities to noisy edge counts and sample an SBM graph."""
    _, _, order = _template(stats, n_fraud, n_benign)
    g = sample_sbm(fitted_sbm_params(stats), seed)
    return LabeledGraph.from_edges(stats.vertex_ids, stats.is_fraud, order[g.edges])


def _chung_lu_edges(rng: np.random.Generator, weights: np.ndarray, two_m: float, chunk: int = 1 << 22) -> np.ndarray:
    """Edges (i < j) with independent probability min(1, w_i w_j / two_m)."""
    n = weights.shape[0]
    out = []
    rows_per_chunk = max(1, chunk // max(n, 1))
    for r0 in range(0, n, rows_per_chunk):
        r1 = min(n, r0 + rows_per_chunk)
        p = np.minimum(1.0, np.outer(weights[r0:r1], weights) / two_m)
        hit = rng.random(p.shape) < p
        ii, jj = np.nonzero(hit)
        ii = ii + r0
        keep = jj > ii
        out.append(np.column_stack([ii[keep], jj[keep]]))
    return np.concatenate(out) if out else np.empty((0, 2), dtype=np.int64)


def _uniform_edges(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    total = n_choose_2(n)
    m = min(total, max(0, m))
    flat = np.sort(rng.choice(total, size=m, replace=False)) if m else np.empty(0, dtype=np.int64)
    i, j = _triu_pairs(flat, n)
    return np.column_stack([i, j])


def _count_triangles(adj: list[set[int]]) -> int:
    total = 0
    for u, nbrs in enumerate(adj):
        for v in nbrs:
            if v > u:
                total += sum(1 for w in adj[u] & adj[v] if w > v)
    return total


def rewire_toward_triangles(
    edges: np.ndarray,
    n: int,
    swappable: np.ndarray,
    target: float,
    rng: np.random.Generator,
    max_steps: int,
    tolerance: float = 0.05,
) -> tuple[np.ndarray, dict]:
    """Degree-preserving double-edge swaps among ``swappable`` edges.

    A swap is accepted iff it moves the triangle count strictly closer to
    ``target``. Stops within ``tolerance * target`` or after ``max_steps``.
    """
    adj: list[set[int]] = [set() for _ in range(n)]
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    pool = [tuple(map(int, e)) for e in edges[swappable]]
    fixed = [tuple(map(int, e)) for e in edges[~swappable]]
    tri = _count_triangles(adj)
    start = tri
    accepted = 0
    steps = 0

    def done(t):
        return abs(t - target) <= tolerance * abs(target) if target != 0 else t == 0

    while steps < max_steps and len(pool) >= 2 and not done(tri):
        steps += 1
        x, y = rng.choice(len(pool), size=2, replace=False)
        a, b = pool[x]
        c, d = pool[y]
        if rng.random() < 0.5:
            c, d = d, c
        if len({a, b, c, d}) < 4 or d in adj[a] or b in adj[c]:
            continue
        delta = 0
        adj[a].discard(b); adj[b].discard(a)
        delta -= len(adj[a] & adj[b])
        adj[c].discard(d); adj[d].discard(c)
        delta -= len(adj[c] & adj[d])
        delta += len(adj[a] & adj[d])
        adj[a].add(d); adj[d].add(a)
        delta += len(adj[c] & adj[b])
        adj[c].add(b); adj[b].add(c)
        if abs(tri + delta - target) < abs(tri - target):
            tri += delta
            pool[x] = (min(a, d), max(a, d))
            pool[y] = (min(c, b), max(c, b))
            accepted += 1
        else:
            adj[a].discard(d); adj[d].discard(a)
            adj[c].discard(b); adj[b].discard(c)
            adj[a].add(b); adj[b].add(a)
            adj[c].add(d); adj[d].add(c)
    new_edges = np.array(fixed + pool, dtype=np.int64).reshape(-1, 2)
    info = {"triangles_before": start, "triangles_after": tri, "accepted": accepted, "steps": steps}
    return new_edges, info


def sample_agm(
    stats: NoisyStats,
    with_triangles: bool = False,
    n_fraud: int | None = None,
    n_benign: int | None = None,
    seed=None,
    max_steps: int | None = None,
    return_info: bool = False,
):
    """Sample a graph matching a noisy degree sequence (and triangle count).

    The benign block is Chung-Lu: pair (i, j) is an edge with probability
    ``min(1, w_i w_j / (2 m_bb))`` where ``w`` rescales the noisy benign
    degrees so the weights sum to ``2 m_bb``. Cross and fraud blocks follow the
    fitted SBM. The optional triangle pass rewires benign-benign edges; with
    ``return_info`` its counters are returned alongside the graph.
    """
    if "degree_sequence" not in stats.values:
        raise ValueError("statistics carry no degree sequence")
    nb, nf, order = _template(stats, n_fraud, n_benign)
    ss = as_seed_sequence(seed)
    s_bb, s_rest, s_tri = ss.spawn(3)
    rng_bb = np.random.default_rng(s_bb)

    deg = np.clip(np.asarray(stats.noisy("degree_sequence"), dtype=float), 0.0, None)
    m_bb = float(stats.noisy("edge_count_bb"))
    m_bb = min(m_bb, float(n_choose_2(nb)))
    if m_bb <= 0 or nb < 2:
        bb = np.empty((0, 2), dtype=np.int64)
    elif deg.sum() == 0:
        bb = _uniform_edges(rng_bb, nb, int(round(m_bb)))
    else:
        w = deg * (2.0 * m_bb / deg.sum())
        bb = _chung_lu_edges(rng_bb, w, 2.0 * m_bb)

    params = fitted_sbm_params(stats)
    rest = sample_sbm(
        SbmParams(n_fraud=nf, n_benign=nb, p_fraud=params.p_fraud, p_benign=0.0, p_cross=params.p_cross),
        s_rest,
    )
    edges = np.concatenate([bb, rest.edges])  # SBM order: benign 0..nb-1, fraud after
    info = {}
    if with_triangles:
        if "triangle_count" not in stats.values:
            raise ValueError("statistics carry no triangle count")
        swappable = (edges[:, 0] < nb) & (edges[:, 1] < nb)
        steps = max_steps if max_steps is not None else 10 * (nb + nf)
        edges, info = rewire_toward_triangles(
            edges, nb + nf, swappable, float(stats.noisy("triangle_count")), np.random.default_rng(s_tri), steps
        )
    g = LabeledGraph.from_edges(stats.vertex_ids, stats.is_fraud, order[edges] if edges.size else edges)
    return (g, info) if return_info else g


def benign_pair_index(graph: LabeledGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All unordered pairs with at least one benign endpoint, plus edge indicator.

    Pairs are in row-major upper-triangle order, which is also the
    tie-breaking order of :func:`topm_filter`.
    """
    n = graph.n
    i, j = np.triu_indices(n, k=1)
    keep = ~(graph.is_fraud[i] & graph.is_fraud[j])
    i, j = i[keep], j[keep]
    flat_all = np.flatnonzero(keep)
    e = graph.edges
    edge_flat = e[:, 0] * (2 * n - e[:, 0] - 1) // 2 + (e[:, 1] - e[:, 0] - 1)
    is_edge = np.isin(flat_all, edge_flat, assume_unique=True)
    return i, j, is_edge


def noisy_adjacency(graph: LabeledGraph, scale: float, rng: np.random.Generator):
    """Benign-involving pairs with scores ``1[edge] + Laplace(scale)``."""
    i, j, is_edge = benign_pair_index(graph)
    noisy = is_edge.astype(float)
    if scale > 0:
        noisy = noisy + sample_laplace(scale, rng, size=noisy.shape[0])
    return i, j, is_edge, noisy


def topm_filter(graph: LabeledGraph, stats: NoisyStats, seed=None) -> LabeledGraph:
    """Perturb adjacency entries and keep the highest-scoring pairs.

    ``graph`` must be the graph the statistics were computed on. The
    fraud-fraud block is copied; among benign-involving pairs the
    ``m_noisy - m_ff`` best noisy scores become edges, ties by pair order.
    """
    if graph.vertex_ids != stats.vertex_ids:
        raise ValueError("graph does not match the statistics' vertex set")
    rng = np.random.default_rng(seed)
    i, j, _, noisy = noisy_adjacency(graph, stats.values["adjacency"].scale, rng)
    m_ff = stats.edge_count_ff
    m_target = int(round(float(stats.noisy("edge_count"))))
    m_target = min(max(m_target, m_ff), m_ff + i.shape[0])
    keep = m_target - m_ff
    chosen = np.argsort(-noisy, kind="stable")[:keep]
    f = graph.is_fraud
    e = graph.edges
    ff_edges = e[f[e[:, 0]] & f[e[:, 1]]]
    new = np.concatenate([ff_edges, np.column_stack([i[chosen], j[chosen]])])
    return LabeledGraph.from_edges(graph.vertex_ids, graph.is_fraud, new)


def generate_synthetic(
    graph: LabeledGraph,
    method,
    epsilon: float,
    delta: float = DEFAULT_DELTA,
    noise_enabled: bool = True,
    seed=None,
    D: float | None = None,
) -> tuple[LabeledGraph, NoisyStats]:
    """Estimate statistics and sample one synthetic graph."""
    m = _as_method(method)
    ss = as_seed_sequence(seed)
    s_est, s_sample = ss.spawn(2)
    if D is None:
        D = m.threshold(graph)
    stats = estimate_stats_private(graph, m, epsilon, delta, D, noise_enabled, np.random.default_rng(s_est))
    if m.name == "sbm":
        out = fit_and_sample_sbm(stats, seed=s_sample)
    elif m.name == "agm":
        out = sample_agm(stats, False, seed=s_sample)
    elif m.name == "agm_triangles":
        out = sample_agm(stats, True, seed=s_sample)
    else:
        base = truncate_by_degree(graph, D) if noise_enabled else graph
        out = topm_filter(base, stats, s_sample)
    return out, stats


# ---------------------------------------------------------------------------
# Error reporting
# ---------------------------------------------------------------------------

def relative_error(true, noisy) -> float:
    """Entrywise |noisy - true| / |true| (absolute error where true is 0), averaged."""
    t = np.atleast_1d(np.asarray(true, dtype=float))
    x = np.atleast_1d(np.asarray(noisy, dtype=float))
    err = np.abs(x - t)
    nz = t != 0
    err[nz] = err[nz] / np.abs(t[nz])
    return float(err.mean()) if err.size else 0.0


def _stat_errors(graph: LabeledGraph, stats: NoisyStats, rng: np.random.Generator) -> dict[str, float]:
    """Relative error of each released statistic against the untruncated graph."""
    full = compute_stats(graph)
    out = {}
    kept = graph.index_of
    kept_benign = [kept[v] for v, f in zip(stats.vertex_ids, stats.is_fraud) if not f]
    for name, val in stats.values.items():
        if name == "adjacency":
            work = graph.induced_subgraph([kept[v] for v in stats.vertex_ids])
            _, _, is_edge, noisy = noisy_adjacency(work, val.scale, rng)
            out[name] = relative_error(is_edge.astype(float), noisy)
        elif name == "degree_sequence":
            # removed benign vertices contribute a released degree of 0
            released = np.zeros(graph.n)
            released[kept_benign] = val.noisy
            out[name] = relative_error(graph.degrees[~graph.is_fraud], released[~graph.is_fraud])
        else:
            out[name] = relative_error(_true_value(full, name), val.noisy)
    return out


def stat_error_report(
    graph: LabeledGraph,
    methods: Iterable[str] = METHODS,
    epsilon: float = 5.0,
    d_multipliers: Sequence[float] = (1.0,),
    trials: int = 10,
    delta: float = DEFAULT_DELTA,
    seed=0,
) -> list[dict]:
    """Mean relative error per (method, D multiplier, statistic) over trials."""
    root = as_seed_sequence(seed)
    rows = []
    for method in methods:
        for mult in d_multipliers:
            sm = SynthMethod(method, mult)
            D = sm.threshold(graph)
            errs: dict[str, list[float]] = {}
            for trial_seq in root.spawn(trials):
                s_est, s_adj = trial_seq.spawn(2)
                stats = estimate_stats_private(graph, sm, epsilon, delta, D, True, np.random.default_rng(s_est))
                for k, v in _stat_errors(graph, stats, np.random.default_rng(s_adj)).items():
                    errs.setdefault(k, []).append(v)
            for k, v in errs.items():
                arr = np.asarray(v)
                sem = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else float("nan")
                rows.append(
                    {
                        "method": method,
                        "d_multiplier": mult,
                        "D": D,
                        "statistic": k,
                        "rel_error": float(arr.mean()),
                        "std_err": sem,
                        "trials": len(arr),
                    }
                )
    return rows
