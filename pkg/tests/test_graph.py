import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraudbench.graph import (
    GraphFormatError,
    LabeledGraph,
    SbmParams,
    _triu_pairs,
    compute_stats,
    graph_from_pairs,
    inject_fraud_clique,
    load_graph,
    sample_sbm,
    truncate_by_degree,
    write_graph,
)

from conftest import brute_triangles, small_graphs


def _write(tmp_path, edges_text, labels_text, meta_text=None):
    e = tmp_path / "edges.txt"
    l = tmp_path / "labels.csv"
    e.write_text(edges_text)
    l.write_text(labels_text)
    m = None
    if meta_text is not None:
        m = tmp_path / "meta.csv"
        m.write_text(meta_text)
    return e, l, m


class TestLoad:
    def test_minimal(self, tmp_path):
        g = load_graph(*_write(tmp_path, "a b\n", "vertex,label\na,0\nb,1\n")[:2])
        assert (g.n_benign, g.n_fraud, g.n_edges) == (1, 1, 1)

    def test_self_loop_rejected(self, tmp_path):
        with pytest.raises(GraphFormatError, match="self-loop"):
            load_graph(*_write(tmp_path, "a a\n", "vertex,label\na,0\n")[:2])

    def test_dedup(self, tmp_path):
        g = load_graph(*_write(tmp_path, "a b\nb a\na b\n", "vertex,label\na,0\nb,1\n")[:2])
        assert g.n_edges == 1

    def test_missing_label(self, tmp_path):
        with pytest.raises(GraphFormatError, match="no label"):
            load_graph(*_write(tmp_path, "a c\n", "vertex,label\na,0\n")[:2])

    def test_malformed_line_has_line_number(self, tmp_path):
        with pytest.raises(GraphFormatError, match=":3:"):
            load_graph(*_write(tmp_path, "# header\na b\na b c\n", "vertex,label\na,0\nb,1\n")[:2])

    def test_bad_label_value(self, tmp_path):
        with pytest.raises(GraphFormatError, match=":3:"):
            load_graph(*_write(tmp_path, "a b\n", "vertex,label\na,0\nb,2\n")[:2])

    def test_isolated_vertex_kept_and_order_follows_labels(self, tmp_path):
        g = load_graph(*_write(tmp_path, "b a\n", "vertex,label\nz,1\na,0\nb,0\n")[:2])
        assert g.vertex_ids == ("z", "a", "b")
        assert g.degrees.tolist() == [0, 1, 1]

    def test_metadata_and_roundtrip(self, tmp_path):
        e, l, m = _write(tmp_path, "a b\n", "vertex,label\na,0\nb,1\n", "vertex,f1,f2\nb,1.5,2\na,0.25,-1\n")
        g = load_graph(e, l, m)
        assert g.metadata.tolist() == [[0.25, -1.0], [1.5, 2.0]]
        out = tmp_path / "out"
        out.mkdir()
        write_graph(g, out / "e.txt", out / "l.csv", out / "m.csv")
        assert load_graph(out / "e.txt", out / "l.csv", out / "m.csv").equals(g)

    def test_metadata_missing_vertex(self, tmp_path):
        e, l, m = _write(tmp_path, "a b\n", "vertex,label\na,0\nb,1\n", "vertex,f1\na,1\n")
        with pytest.raises(GraphFormatError, match="'b'"):
            load_graph(e, l, m)


class TestModel:
    def test_from_edges_rejects_self_loop(self):
        with pytest.raises(ValueError):
            LabeledGraph.from_edges(["a", "b"], [0, 1], [(0, 0)])

    def test_immutable_arrays(self):
        g = graph_from_pairs([("a", "b")], fraud=["b"])
        with pytest.raises(ValueError):
            g.edges[0, 0] = 1

    def test_has_edge(self):
        g = graph_from_pairs([("a", "b"), ("b", "c")], fraud=["c"])
        assert g.has_edge("b", "a") and not g.has_edge("a", "c") and not g.has_edge("a", "zz")

    @given(small_graphs())
    def test_invariants(self, g):
        e = g.edges
        assert (e[:, 0] < e[:, 1]).all()
        assert len({tuple(x) for x in e.tolist()}) == g.n_edges
        assert g.degrees.sum() % 2 == 0
        assert g.n_fraud + g.n_benign == g.n


@given(st.integers(2, 60), st.data())
def test_triu_decoding_matches_numpy(n, data):
    i, j = np.triu_indices(n, k=1)
    flat = np.arange(i.shape[0])
    di, dj = _triu_pairs(flat, n)
    assert np.array_equal(di, i) and np.array_equal(dj, j)


class TestSbm:
    def test_zero_probabilities(self):
        g = sample_sbm(SbmParams(3, 4, 0.0, 0.0, 0.0), 0)
        assert g.n_edges == 0 and g.n == 7

    def test_complete(self):
        g = sample_sbm(SbmParams(2, 2, 1.0, 1.0, 1.0), 0)
        assert g.n_edges == 6

    def test_seeded_bit_identical(self):
        p = SbmParams(30, 70, 0.2, 0.05, 0.01)
        assert sample_sbm(p, 9).equals(sample_sbm(p, 9))
        assert not sample_sbm(p, 9).equals(sample_sbm(p, 10))

    def test_block_counts_are_binomial(self):
        p = SbmParams(40, 60, 0.3, 0.1, 0.05)
        counts = np.array([
            [compute_stats(g).edge_count_ff, compute_stats(g).edge_count_bb, compute_stats(g).edge_count_bf]
            for g in (sample_sbm(p, s) for s in range(200))
        ])
        pairs = np.array([40 * 39 / 2, 60 * 59 / 2, 40 * 60])
        probs = np.array([0.3, 0.1, 0.05])
        mean, sd = pairs * probs, np.sqrt(pairs * probs * (1 - probs))
        # sample mean within 4 standard errors
        assert np.all(np.abs(counts.mean(axis=0) - mean) < 4 * sd / math.sqrt(200))

    def test_mean_benign_degree(self):
        p = SbmParams(100, 1000, 10 / 99, 5 / 999, 0.0)
        means = [sample_sbm(p, s).degrees[:1000].mean() for s in range(100)]
        assert abs(np.mean(means) - 5.0) < 0.2

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            SbmParams(1, 1, 1.5, 0.0, 0.0)
        with pytest.raises(ValueError):
            SbmParams(-1, 1, 0.5, 0.0, 0.0)


class TestClique:
    def test_size_zero_unchanged(self):
        g = sample_sbm(SbmParams(0, 20, 0, 0.2, 0), 1)
        assert inject_fraud_clique(g, 0, 0.8, 3) is g

    def test_triangle(self):
        g = sample_sbm(SbmParams(0, 10, 0, 0.0, 0), 1)
        h = inject_fraud_clique(g, 3, 1.0, 5)
        assert h.n_fraud == 3 and h.n_edges == 3
        assert set(np.unique(h.edges)) == set(h.fraud_indices)

    def test_too_large(self):
        g = sample_sbm(SbmParams(0, 5, 0, 0.0, 0), 1)
        with pytest.raises(ValueError):
            inject_fraud_clique(g, 6, 1.0, 0)

    def test_review_graph_scale(self):
        base = sample_sbm(SbmParams(0, 2483, 0, 0.0, 0), 0)
        added = [inject_fraud_clique(base, 22, 0.8, s).n_edges for s in range(50)]
        expected = 0.8 * 231
        sd = math.sqrt(231 * 0.8 * 0.2)
        assert inject_fraud_clique(base, 22, 0.8, 0).n_fraud == 22
        assert abs(np.mean(added) - expected) < 4 * sd / math.sqrt(50)

    @given(small_graphs(min_n=3), st.integers(0, 10), st.floats(0, 1), st.integers(0, 99))
    def test_labels_and_edges(self, g, size, density, seed):
        size = min(size, g.n_benign)
        h = inject_fraud_clique(g, size, density, seed)
        assert int((h.is_fraud != g.is_fraud).sum()) == size
        old = {tuple(e) for e in g.edges.tolist()}
        assert old <= {tuple(e) for e in h.edges.tolist()}


class TestTruncate:
    def test_star(self):
        g = graph_from_pairs([("c", f"l{i}") for i in range(5)], fraud=[])
        h = truncate_by_degree(g, 4)
        assert "c" not in h.vertex_ids and h.n == 5 and h.n_edges == 0

    def test_max_degree_unchanged(self):
        g = sample_sbm(SbmParams(5, 30, 0.5, 0.2, 0.1), 2)
        assert truncate_by_degree(g, int(g.degrees.max())).equals(g)

    def test_fraud_retained(self):
        g = graph_from_pairs([("f", f"b{i}") for i in range(10)], fraud=["f"])
        h = truncate_by_degree(g, 2)
        assert "f" in h.vertex_ids and h.n_edges == 10

    @given(small_graphs(), st.integers(0, 8))
    def test_single_pass_property(self, g, D):
        h = truncate_by_degree(g, D)
        assert h.n_fraud == g.n_fraud
        kept = [g.index_of[v] for v in h.vertex_ids]
        assert all(g.is_fraud[i] or g.degrees[i] <= D for i in kept)
        # every benign vertex of input degree <= D survives, even if neighbours go
        assert h.n_benign == int(((~g.is_fraud) & (g.degrees <= D)).sum())


class TestStats:
    def test_triangle(self):
        s = compute_stats(graph_from_pairs([("a", "b"), ("b", "c"), ("a", "c")], fraud=[]))
        assert s.triangle_count == 1 and s.edge_count_bb == 3
        assert s.degree_sequence_benign.tolist() == [2, 2, 2]

    def test_four_cycle(self):
        g = graph_from_pairs([("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")], fraud=["a"])
        s = compute_stats(g)
        assert s.triangle_count == 0 and s.edge_count_bf == 2 and s.edge_count_bb == 2

    def test_er_8_brute_force(self):
        pairs = np.array(list(itertools.combinations(range(8), 2)))
        keep = np.random.default_rng(7).random(len(pairs)) < 0.5
        g = LabeledGraph.from_edges([str(i) for i in range(8)], [0] * 8, pairs[keep])
        assert compute_stats(g).triangle_count == brute_triangles(g)

    @settings(max_examples=200)
    @given(small_graphs())
    def test_counts_match_enumeration(self, g):
        s = compute_stats(g)
        f = g.is_fraud
        blocks = [int(f[a]) + int(f[b]) for a, b in g.edges.tolist()]
        assert (s.edge_count_bb, s.edge_count_bf, s.edge_count_ff) == (
            blocks.count(0),
            blocks.count(1),
            blocks.count(2),
        )
        assert s.triangle_count == brute_triangles(g)
        assert s.triangle_count <= math.comb(g.n, 3)
        assert len(s.degree_sequence_benign) == g.n_benign
