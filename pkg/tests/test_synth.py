import numpy as np
import pytest

from src.graph import degrees
from src.params import SbmSpec
from src.synth import generate_sbm, geometric_positions, triangle_pairs


class TestGeometricPositions:
    def test_rate_and_order(self):
        idx = geometric_positions(100_000, 0.1, np.random.default_rng(0))
        assert abs(len(idx) - 10_000) < 4 * np.sqrt(100_000 * 0.1 * 0.9)
        assert idx.min() >= 0 and idx.max() < 100_000
        assert np.all(np.diff(idx) > 0)

    def test_limits(self):
        rng = np.random.default_rng(0)
        assert len(geometric_positions(50, 0.0, rng)) == 0
        assert len(geometric_positions(0, 0.5, rng)) == 0
        np.testing.assert_array_equal(geometric_positions(7, 1.0, rng), np.arange(7))

    def test_dense_probability_spans_batches(self):
        idx = geometric_positions(20, 0.9, np.random.default_rng(3))
        assert len(np.unique(idx)) == len(idx)
        assert idx.max() < 20


class TestTrianglePairs:
    def test_matches_enumeration(self):
        expected = [(i, j) for j in range(1, 60) for i in range(j)]
        i, j = triangle_pairs(np.arange(len(expected)))
        assert list(zip(i.tolist(), j.tolist())) == expected

    def test_large_indices(self):
        n = 100_000
        idx = np.array([0, n * (n - 1) // 2 - 1, (n - 1) * (n - 2) // 2])
        i, j = triangle_pairs(idx)
        np.testing.assert_array_equal(i, [0, n - 2, 0])
        np.testing.assert_array_equal(j, [1, n - 1, n - 1])


class TestGenerateSbm:
    def test_complete_blocks(self):
        g, labels = generate_sbm(SbmSpec(num_communities=2, community_size=3, p_in=1.0, p_out=0.0))
        assert g.n == 6 and g.m == 6
        np.testing.assert_array_equal(g.edges, [[0, 1], [0, 2], [1, 2], [3, 4], [3, 5], [4, 5]])
        np.testing.assert_array_equal(labels, [0, 0, 0, 1, 1, 1])

    def test_complete_bipartite_between_blocks(self):
        g, _ = generate_sbm(SbmSpec(num_communities=2, community_size=3, p_in=0.0, p_out=1.0))
        assert g.m == 9
        assert all(g.has_edge(u, v) for u in range(3) for v in range(3, 6))

    def test_deterministic(self):
        spec = SbmSpec(num_communities=4, community_size=50, p_in=0.1, p_out=0.01, seed=11)
        a, la = generate_sbm(spec)
        b, lb = generate_sbm(spec)
        np.testing.assert_array_equal(a.edges, b.edges)
        np.testing.assert_array_equal(la, lb)
        other, _ = generate_sbm(SbmSpec(num_communities=4, community_size=50, p_in=0.1, p_out=0.01, seed=12))
        assert not np.array_equal(a.edges, other.edges)

    def test_edge_count_and_assortativity(self):
        g, labels = generate_sbm(SbmSpec(num_communities=10, community_size=100, p_in=0.05, p_out=0.005))
        # expected 10 * 4950 * 0.05 + 45 * 10000 * 0.005 = 4725
        assert abs(g.m - 4725) < 5 * np.sqrt(4725)
        same = labels[g.edges[:, 0]] == labels[g.edges[:, 1]]
        assert abs(same.sum() - 2475) < 5 * np.sqrt(2475)
        assert degrees(g).sum() == 2 * g.m

    def test_disassortative_warning(self, monkeypatch):
        import src.synth as synth

        messages = []
        monkeypatch.setattr(synth.logger, "warning", lambda msg, *args: messages.append(msg % args))
        generate_sbm(SbmSpec(num_communities=2, community_size=5, p_in=0.1, p_out=0.5))
        assert len(messages) == 1 and "exceeds" in messages[0]

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            SbmSpec(num_communities=0)
        with pytest.raises(ValueError):
            SbmSpec(p_in=1.5)
