import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from fraudbench.graph import LabeledGraph
from fraudbench.metrics import (
    Leaderboard,
    auc,
    f1_best_threshold,
    l1_error,
    random_permutation_baseline,
    top1_error,
    weighted_kendall_tau,
)


def labeled(fraud):
    n = len(fraud)
    return LabeledGraph.from_edges([str(i) for i in range(n)], fraud, [])


def brute_auc(s, fraud):
    f = [x for x, y in zip(s, fraud) if y]
    b = [x for x, y in zip(s, fraud) if not y]
    return sum(1 for x in f for y in b if x > y) / (len(f) * len(b))


def brute_f1(s, fraud):
    best = Fraction(0)
    for t in set(s):
        pred = [x >= t for x in s]
        tp = sum(p and y for p, y in zip(pred, fraud))
        fp = sum(p and not y for p, y in zip(pred, fraud))
        fn = sum((not p) and y for p, y in zip(pred, fraud))
        prec = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
        rec = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else Fraction(0)
        best = max(best, f1)
    return float(best)


# scores from a small alphabet so ties are common
scores_and_labels = st.integers(2, 50).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(-3, 3).map(float), min_size=n, max_size=n),
        st.lists(st.booleans(), min_size=n, max_size=n),
    )
)


class TestAuc:
    def test_separated(self):
        assert auc([1, 1, 0, 0], labeled([1, 1, 0, 0])) == 1.0

    def test_all_tied_is_zero(self):
        assert auc([0.3] * 4, labeled([1, 0, 1, 0])) == 0.0

    def test_six_vertex_instance(self):
        s = [0.1, 0.9, 0.4, 0.4, 0.7, 0.2]
        fraud = [0, 1, 1, 0, 0, 1]
        assert auc(s, labeled(fraud)) == brute_auc(s, fraud)

    def test_missing_class(self):
        with pytest.raises(ValueError):
            auc([1, 2], labeled([1, 1]))
        with pytest.raises(ValueError):
            auc([1, 2], labeled([0, 0]))

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            auc([1, 2, 3], labeled([1, 0]))

    @given(scores_and_labels)
    def test_brute_force(self, data):
        s, fraud = data
        assume(any(fraud) and not all(fraud))
        assert auc(s, labeled(fraud)) == brute_auc(s, fraud)

    @given(scores_and_labels)
    def test_complement(self, data):
        s, fraud = data
        assume(any(fraud) and not all(fraud))
        g = labeled(fraud)
        total = auc(s, g) + auc([-x for x in s], g)
        tied = any(x == y for x, fr in zip(s, fraud) if fr for y, fb in zip(s, fraud) if not fb)
        assert total <= 1.0 + 1e-12
        assert math.isclose(total, 1.0) == (not tied)

    @given(scores_and_labels)
    def test_monotone_invariance(self, data):
        s, fraud = data
        assume(any(fraud) and not all(fraud))
        g = labeled(fraud)
        assert auc(s, g) == auc([math.exp(x) * 3 + 1 for x in s], g)


class TestF1:
    def test_separated(self):
        assert f1_best_threshold([0.9, 0.8, 0.1], labeled([1, 1, 0])) == 1.0

    def test_all_fraud(self):
        assert f1_best_threshold([0.3, 0.1, 0.7], labeled([1, 1, 1])) == 1.0

    def test_five_vertex_instance(self):
        s = [0.5, 0.2, 0.9, 0.5, 0.1]
        fraud = [1, 0, 0, 1, 1]
        assert f1_best_threshold(s, labeled(fraud)) == brute_f1(s, fraud)

    def test_no_fraud(self):
        with pytest.raises(ValueError):
            f1_best_threshold([1, 2], labeled([0, 0]))

    @given(scores_and_labels)
    def test_exhaustive_scan(self, data):
        s, fraud = data
        assume(any(fraud))
        assert f1_best_threshold(s, labeled(fraud)) == brute_f1(s, fraud)


def test_l1():
    assert l1_error(0.7, 0.7) == 0
    assert l1_error(0.9, 0.4) == pytest.approx(0.5)
    trials = np.array([0.6, 0.8, 0.75])
    assert np.mean(l1_error(0.7, trials)) == pytest.approx((0.1 + 0.1 + 0.05) / 3)


class TestTop1:
    def test_argmax(self):
        assert top1_error({"A": 0.9, "B": 0.7}, "A") == 0.0

    def test_gap(self):
        assert top1_error({"A": 0.9, "B": 0.7}, "B") == pytest.approx(0.2)

    def test_unknown(self):
        with pytest.raises(KeyError):
            top1_error({"A": 0.9}, "Z")

    @given(st.lists(st.floats(0, 1), min_size=10, max_size=10), st.integers(0, 9))
    def test_formula(self, vals, pick):
        d = {f"d{i}": v for i, v in enumerate(vals)}
        assert top1_error(d, f"d{pick}") == max(vals) - vals[pick]
        assert top1_error(d, f"d{pick}") >= 0


class TestKendall:
    def test_identical(self):
        t = {"A": 0.9, "B": 0.7, "C": 0.5}
        assert weighted_kendall_tau(t, Leaderboard.from_values(t)) == 0

    def test_single_swap(self):
        t = {"A": 0.9, "B": 0.7, "C": 0.5}
        assert weighted_kendall_tau(t, ["B", "A", "C"]) == pytest.approx(0.2)

    def test_mismatched(self):
        with pytest.raises(ValueError):
            weighted_kendall_tau({"A": 1.0, "B": 0.5}, ["A", "C"])

    @given(st.lists(st.floats(0, 1), min_size=2, max_size=7), st.randoms())
    def test_brute_force_and_zero_iff_sorted(self, vals, r):
        t = {f"d{i}": v for i, v in enumerate(vals)}
        order = list(t)
        r.shuffle(order)
        pos = {k: i for i, k in enumerate(order)}
        expected = sum(
            abs(t[i] - t[j])
            for i, j in itertools.combinations(t, 2)
            if (t[i] - t[j]) * (pos[i] - pos[j]) > 0
        )
        got = weighted_kendall_tau(t, order)
        assert got == pytest.approx(expected, abs=1e-12)
        non_increasing = all(t[a] >= t[b] for a, b in zip(order, order[1:]))
        assert (got == 0.0) == non_increasing

    def test_baseline_examples(self):
        assert random_permutation_baseline({"A": 0.9, "B": 0.5}) == pytest.approx(0.2)
        assert random_permutation_baseline({k: 0.6 for k in "ABCD"}) == 0.0
        with pytest.raises(ValueError):
            random_permutation_baseline({"A": 1.0})

    @given(st.lists(st.floats(0, 1), min_size=2, max_size=12))
    def test_baseline_closed_form(self, vals):
        t = {f"d{i}": v for i, v in enumerate(vals)}
        expected = 0.5 * sum(abs(a - b) for a, b in itertools.combinations(vals, 2))
        assert random_permutation_baseline(t) == pytest.approx(expected, abs=1e-12)

    def test_baseline_ten_detector_suite_scale(self):
        # ten detectors spread evenly between poor and strong accuracy
        aucs = {f"d{i}": v for i, v in enumerate(np.linspace(0.2, 0.95, 10))}
        assert 5.0 <= random_permutation_baseline(aucs) <= 8.0


def test_leaderboard_ties_by_name():
    lb = Leaderboard.from_values({"b": 0.5, "a": 0.5, "c": 0.9})
    assert lb.names == ["c", "a", "b"]
    assert lb.rank() == {"c": 0, "a": 1, "b": 2}
    with pytest.raises(ValueError):
        Leaderboard.from_values({"a": float("nan")})
