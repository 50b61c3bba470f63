"""Brute-force reference implementations used by several test modules."""

import itertools
import math

import numpy as np

from fraudbench.graph import LabeledGraph


def bounded_graph(rng, n, p, D, fraud_frac=0.3):
    """Random graph whose benign vertices all have degree <= D."""
    fraud = rng.random(n) < fraud_frac
    adj = [set() for _ in range(n)]
    for i, j in itertools.combinations(range(n), 2):
        if rng.random() < p:
            adj[i].add(j)
            adj[j].add(i)
    for v in rng.permutation(n):
        while not fraud[v] and len(adj[v]) > D:
            u = sorted(adj[v])[int(rng.integers(len(adj[v])))]
            adj[v].discard(u)
            adj[u].discard(v)
    return fraud, adj


def oracle_stats(fraud, adj) -> dict:
    n = len(adj)
    edges = [(i, j) for i in range(n) for j in adj[i] if i < j]
    bb = sum(1 for i, j in edges if not fraud[i] and not fraud[j])
    ff = sum(1 for i, j in edges if fraud[i] and fraud[j])
    tri = sum(1 for i, j in edges for k in adj[i] & adj[j] if k > j)
    return {
        "edge_count": len(edges),
        "edge_count_bb": bb,
        "edge_count_bf": len(edges) - bb - ff,
        "degree_sequence": np.array([len(adj[v]) for v in range(n) if not fraud[v]]),
        "triangle_count": tri,
        "adjacency": set(edges),
    }


def stat_distance(name, a, b) -> float:
    if name == "adjacency":
        return len(a[name] ^ b[name])
    if name == "degree_sequence":
        return float(np.abs(a[name] - b[name]).sum())
    return abs(a[name] - b[name])


def max_rewiring_change(fraud, adj, D) -> dict:
    """Largest change of each statistic over all rewirings of one benign vertex.

    The rewired vertex may connect to any subset of at most D other vertices;
    nothing else is constrained, which only makes the check stricter.
    """
    n = len(adj)
    base = oracle_stats(fraud, adj)
    worst = {k: 0.0 for k in base}
    for v in range(n):
        if fraud[v]:
            continue
        others = [u for u in range(n) if u != v]
        for size in range(min(D, len(others)) + 1):
            for new in itertools.combinations(others, size):
                adj2 = [set(s) for s in adj]
                for u in adj2[v]:
                    adj2[u].discard(v)
                adj2[v] = set(new)
                for u in new:
                    adj2[u].add(v)
                other = oracle_stats(fraud, adj2)
                for k in worst:
                    worst[k] = max(worst[k], stat_distance(k, base, other))
    return worst


def to_graph(fraud, adj) -> LabeledGraph:
    n = len(adj)
    edges = [(i, j) for i in range(n) for j in adj[i] if i < j]
    return LabeledGraph.from_edges([f"v{i}" for i in range(n)], fraud, edges)


def brute_smooth_sensitivity(graph: LabeledGraph, D, beta) -> float:
    deg = [int(d) for d, f in zip(graph.degrees, graph.is_fraud) if not f]
    n_b = len(deg)
    best = 0.0
    for t in range(n_b + 1):
        n_t = sum(1 for d in deg if D - t <= d <= D + t + 1)
        best = max(best, math.exp(-beta * t) * (1 + t + n_t))
    return best
