"""Tests for graph ingestion, normalization, core numbers and edge splits."""

import networkx as nx
import numpy as np
import pytest

from src.graph import (
    GraphFormatError,
    NodeFeatures,
    core_numbers,
    degrees,
    from_edges,
    graph_stats,
    load_edge_list,
    load_features,
    load_labels,
    normalize_adjacency,
    sample_non_edges,
    split_edges,
    write_edge_list,
    write_labels,
)


def _peeling_oracle(g):
    """Core numbers by repeatedly deleting a minimum-degree node."""
    adj = {i: set(g.neighbors(i).tolist()) for i in range(g.n)}
    core = np.zeros(g.n, dtype=np.int64)
    k = 0
    while adj:
        v = min(adj, key=lambda u: len(adj[u]))
        k = max(k, len(adj[v]))
        core[v] = k
        for u in adj[v]:
            adj[u].discard(v)
        del adj[v]
    return core


def _to_networkx(g):
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    G.add_edges_from(g.edges.tolist())
    return G


class TestLoadEdgeList:
    def test_dedupes_and_symmetrizes(self, write_text):
        g = load_edge_list(write_text("g.txt", "0 1\n1 0\n0 1\n"))
        assert (g.n, g.m) == (2, 1)
        np.testing.assert_array_equal(g.col_indices, [1, 0])

    def test_triangle(self, write_text):
        g = load_edge_list(write_text("g.txt", "0 1\n1 2\n2 0\n"))
        assert (g.n, g.m) == (3, 3)

    def test_self_loop_dropped(self, write_text):
        g = load_edge_list(write_text("g.txt", "5 5\n"))
        assert (g.n, g.m) == (1, 0)
        assert g.node_ids.tolist() == [5]

    def test_first_appearance_order(self, write_text):
        g = load_edge_list(write_text("g.txt", "# header\n% konect\n\n10 3\n3 7\n"))
        assert g.node_ids.tolist() == [10, 3, 7]
        assert g.has_edge(0, 1) and g.has_edge(1, 2) and not g.has_edge(0, 2)

    def test_extra_columns_ignored(self, write_text):
        g = load_edge_list(write_text("g.txt", "0 1 0.5 1700000000\n1 2 2.0\n"))
        assert (g.n, g.m) == (3, 2)

    def test_malformed_line_reports_line_number(self, write_text):
        path = write_text("g.txt", "0 1\n# ok\n1 x\n")
        with pytest.raises(GraphFormatError) as excinfo:
            load_edge_list(path)
        assert excinfo.value.lineno == 3
        assert ":3:" in str(excinfo.value)

    def test_single_token_line(self, write_text):
        with pytest.raises(GraphFormatError):
            load_edge_list(write_text("g.txt", "4\n"))

    def test_negative_id(self, write_text):
        with pytest.raises(GraphFormatError):
            load_edge_list(write_text("g.txt", "0 -1\n"))

    def test_invalid_utf8_reports_line_number(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_bytes(b"0 1\n1 2\n\xff\xfe 3\n")
        with pytest.raises(GraphFormatError) as excinfo:
            load_edge_list(str(path))
        assert excinfo.value.lineno == 3

    def test_id_above_int64(self, write_text):
        path = write_text("g.txt", "0 1\n0 99999999999999999999\n")
        with pytest.raises(GraphFormatError) as excinfo:
            load_edge_list(path)
        assert excinfo.value.lineno == 2
        g = load_edge_list(write_text("max.txt", f"0 {2 ** 63 - 1}\n"))
        assert g.node_ids.tolist() == [0, 2 ** 63 - 1]

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_edge_list(str(tmp_path / "absent.txt"))

    def test_zero_nodes(self, write_text):
        with pytest.raises(ValueError, match="No nodes"):
            load_edge_list(write_text("g.txt", "# nothing here\n\n"))


class TestGraphInvariants:
    def test_csr_invariants(self, random_graph):
        g = random_graph
        assert len(g.col_indices) == 2 * g.m
        assert degrees(g).sum() == 2 * g.m
        for i in range(g.n):
            nbrs = g.neighbors(i)
            assert np.all(np.diff(nbrs) > 0)
            assert i not in nbrs
            for j in nbrs:
                assert i in g.neighbors(j)

    def test_edges_canonical(self, random_graph):
        e = random_graph.edges
        assert np.all(e[:, 0] < e[:, 1])
        assert np.all(np.diff(random_graph.edge_keys) > 0)

    def test_arrays_read_only(self, triangle):
        with pytest.raises(ValueError):
            triangle.col_indices[0] = 2

    def test_out_of_range_endpoint(self):
        with pytest.raises(ValueError):
            from_edges(3, [(0, 3)])


class TestNormalizeAdjacency:
    def test_single_edge(self):
        a = normalize_adjacency(from_edges(2, [(0, 1)])).toarray()
        np.testing.assert_allclose(a, np.full((2, 2), 0.5))

    def test_isolated_node(self):
        a = normalize_adjacency(from_edges(3, [(0, 1)])).toarray()
        assert a[2, 2] == 1.0
        assert a[2, :2].sum() == 0.0 and a[:2, 2].sum() == 0.0

    def test_triangle(self, triangle):
        np.testing.assert_allclose(normalize_adjacency(triangle).toarray(), np.full((3, 3), 1.0 / 3.0))

    def test_entries_and_symmetry(self, random_graph):
        a = normalize_adjacency(random_graph).toarray()
        d = degrees(random_graph) + 1.0
        dense = random_graph.adjacency.toarray() + np.eye(random_graph.n)
        np.testing.assert_allclose(a, dense / np.sqrt(np.outer(d, d)))
        np.testing.assert_allclose(a, a.T)

    def test_regular_graph_rows_sum_to_one(self):
        cycle = from_edges(6, [(i, (i + 1) % 6) for i in range(6)])
        np.testing.assert_allclose(np.asarray(normalize_adjacency(cycle).sum(axis=1)).ravel(), 1.0)


class TestDegreesAndCores:
    def test_degrees(self, triangle):
        assert degrees(triangle).tolist() == [2, 2, 2]
        assert degrees(from_edges(4, [(0, 1), (0, 2), (0, 3)])).tolist() == [3, 1, 1, 1]
        assert degrees(from_edges(4, [])).tolist() == [0, 0, 0, 0]

    def test_core_examples(self, k4):
        assert core_numbers(from_edges(4, [(0, 1), (1, 2), (0, 2), (2, 3)])).tolist() == [2, 2, 2, 1]
        assert core_numbers(from_edges(3, [(0, 1), (1, 2)])).tolist() == [1, 1, 1]
        assert core_numbers(k4).tolist() == [3, 3, 3, 3]

    def test_edgeless(self):
        assert core_numbers(from_edges(3, [])).tolist() == [0, 0, 0]

    def test_matches_peeling_oracle(self, gnp):
        rng = np.random.default_rng(0)
        for seed in range(100):
            n = int(rng.integers(1, 51))
            p = float(rng.uniform(0.02, 0.5))
            g = gnp(n, p, seed)
            cores = core_numbers(g)
            np.testing.assert_array_equal(cores, _peeling_oracle(g))
            assert np.all(cores <= degrees(g))

    def test_matches_networkx(self, random_graph):
        expected = nx.core_number(_to_networkx(random_graph))
        assert core_numbers(random_graph).tolist() == [expected[i] for i in range(random_graph.n)]

    def test_k_core_has_min_internal_degree(self, random_graph):
        cores = core_numbers(random_graph)
        a = random_graph.adjacency.toarray()
        for k in range(1, int(cores.max()) + 1):
            members = np.flatnonzero(cores >= k)
            assert a[np.ix_(members, members)].sum(axis=1).min() >= k


class TestSplitEdges:
    def _graph_with_100_edges(self, gnp):
        g = gnp(60, 0.1, 3)
        edges = g.edges[:100]
        assert len(edges) == 100
        return from_edges(60, edges)

    def test_counts(self, gnp):
        g = self._graph_with_100_edges(gnp)
        split = split_edges(g, 0.05, 0.10, seed=1)
        assert len(split.val_pos) == 5 and len(split.test_pos) == 10
        assert split.train_graph.m == 85
        assert len(split.val_neg) == 5 and len(split.test_neg) == 10

    def test_disjointness(self, gnp):
        g = self._graph_with_100_edges(gnp)
        split = split_edges(g, 0.05, 0.10, seed=1)
        keys = lambda pairs: {(int(min(a, b)), int(max(a, b))) for a, b in pairs}
        train = keys(split.train_graph.edges)
        val_pos, test_pos = keys(split.val_pos), keys(split.test_pos)
        val_neg, test_neg = keys(split.val_neg), keys(split.test_neg)
        original = keys(g.edges)
        assert not train & val_pos and not train & test_pos and not val_pos & test_pos
        assert val_pos | test_pos | train == original
        assert not (val_neg | test_neg) & original
        assert not val_neg & test_neg
        assert len(val_neg) == 5 and len(test_neg) == 10
        assert all(a != b for a, b in val_neg | test_neg)

    def test_no_holdout(self, random_graph):
        split = split_edges(random_graph, 0.0, 0.0, seed=0)
        np.testing.assert_array_equal(split.train_graph.edges, random_graph.edges)
        assert len(split.val_pos) == len(split.test_neg) == 0

    def test_deterministic(self, random_graph):
        a = split_edges(random_graph, seed=4)
        b = split_edges(random_graph, seed=4)
        np.testing.assert_array_equal(a.test_pos, b.test_pos)
        np.testing.assert_array_equal(a.val_neg, b.val_neg)
        np.testing.assert_array_equal(a.train_graph.col_indices, b.train_graph.col_indices)

    def test_bad_fractions(self, random_graph):
        with pytest.raises(ValueError):
            split_edges(random_graph, 0.5, 0.5)

    def test_too_dense(self, k4):
        with pytest.raises(ValueError, match="too dense"):
            split_edges(k4, 0.25, 0.25)


class TestSampleNonEdges:
    def test_pairs_absent_and_distinct(self, random_graph):
        pairs = sample_non_edges(random_graph, 50, np.random.default_rng(0))
        assert len({tuple(p) for p in pairs.tolist()}) == 50
        for i, j in pairs:
            assert i < j and not random_graph.has_edge(int(i), int(j))

    def test_repeats_allowed(self):
        g = from_edges(3, [(0, 1), (1, 2)])
        pairs = sample_non_edges(g, 5, np.random.default_rng(0), distinct=False)
        assert pairs.tolist() == [[0, 2]] * 5


class TestFilesAndStats:
    def test_features(self, write_text):
        feats = load_features(write_text("x.csv", "1.0,0.0\n0.5,2.0\n0.0,1.0\n"), 3)
        assert feats.kind == "dense" and feats.dim == 2
        with pytest.raises(ValueError, match="rows"):
            load_features(write_text("y.csv", "1.0,0.0\n"), 3)

    def test_identity_features(self):
        feats = NodeFeatures.identity(7)
        assert feats.is_identity and feats.dim == 7

    def test_labels(self, write_text):
        assert load_labels(write_text("l.txt", "0\n1\n1\n"), 3).tolist() == [0, 1, 1]
        with pytest.raises(ValueError):
            load_labels(write_text("m.txt", "0\n1\n"), 3)

    def test_written_files_read_back(self, tmp_path):
        g = from_edges(5, [(3, 4), (0, 3), (1, 2)], node_ids=np.array([10, 11, 12, 13, 14]))
        labels = np.array([0, 1, 1, 0, 2])
        write_edge_list(g, str(tmp_path / "g.edges"))
        write_labels(g, labels, str(tmp_path / "g.labels"))
        back = load_edge_list(str(tmp_path / "g.edges"))
        assert back.m == g.m
        back_labels = load_labels(str(tmp_path / "g.labels"), back.n)
        id_to_label = dict(zip(g.node_ids.tolist(), labels.tolist()))
        assert back_labels.tolist() == [id_to_label[i] for i in back.node_ids.tolist()]

    def test_graph_stats(self, triangle, k4):
        stats = graph_stats(triangle)
        assert (stats["n"], stats["m"], stats["max_core"]) == (3, 3, 2)
        assert stats["components"] == 1 and stats["isolated"] == 0
        assert graph_stats(k4)["max_core"] == 3
        assert graph_stats(from_edges(4, [(0, 1)]))["components"] == 3
