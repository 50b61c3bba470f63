import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from fraudbench.graph import LabeledGraph


@st.composite
def small_graphs(draw, max_n=8, min_n=1, need_both=False):
    """Random labeled graph on at most ``max_n`` vertices."""
    n = draw(st.integers(min_value=max(min_n, 2 if need_both else 1), max_value=max_n))
    pairs = list(itertools.combinations(range(n), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    fraud = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    if need_both:
        fraud[0], fraud[-1] = True, False
    edges = [p for p, keep in zip(pairs, mask) if keep]
    return LabeledGraph.from_edges([f"v{i}" for i in range(n)], fraud, edges)


def random_graph(rng, n, p, fraud_frac=0.3):
    pairs = np.array(list(itertools.combinations(range(n), 2)), dtype=np.int64).reshape(-1, 2)
    keep = rng.random(len(pairs)) < p
    fraud = rng.random(n) < fraud_frac
    return LabeledGraph.from_edges([f"v{i}" for i in range(n)], fraud, pairs[keep])


def brute_triangles(graph):
    adj = {tuple(e) for e in graph.edges.tolist()}
    return sum(
        1
        for a, b, c in itertools.combinations(range(graph.n), 3)
        if (a, b) in adj and (a, c) in adj and (b, c) in adj
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_VERDICTS: dict[int, str] = {}


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line per acceptance criterion, then assert."""

    def record(number: int, ok: bool, detail: str, runtime: float | None = None):
        budget = "" if runtime is None else f" [{runtime:.1f}s]"
        line = f"ACCEPTANCE {number:2d}: {'PASS' if ok else 'FAIL'} {detail}{budget}"
        _VERDICTS[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[n])
