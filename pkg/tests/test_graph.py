"""Tree/distance conversions and MST decoding against independent oracles."""

import itertools

import numpy as np
import pytest

from treeprobe.graph import (
    DepTree,
    DistanceMatrix,
    distances_to_tree,
    mst_prim,
    prufer_to_tree,
    random_tree,
    tree_to_distances,
)

# six-word fixture: heads [2, 5, 4, 2, 0, 5] read as undirected edges
SIX_WORD_EDGES = {(1, 2), (3, 4), (2, 4), (2, 5), (5, 6)}


def floyd_warshall(tree: DepTree) -> np.ndarray:
    """Independent all-pairs oracle: O(n^3) relaxation over unit weights."""
    n = tree.n
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    for i, j in tree.edges:
        dist[i - 1, j - 1] = dist[j - 1, i - 1] = 1.0
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if dist[i, k] + dist[k, j] < dist[i, j]:
                    dist[i, j] = dist[i, k] + dist[k, j]
    return dist


def all_spanning_tree_weights(values: np.ndarray) -> list:
    """Total weight of every labeled spanning tree (Prufer enumeration)."""
    n = values.shape[0]
    if n <= 2:
        return [0.0 if n == 1 else float(values[0, 1])]
    weights = []
    for seq in itertools.product(range(1, n + 1), repeat=n - 2):
        tree = prufer_to_tree(n, seq)
        weights.append(sum(values[i - 1, j - 1] for i, j in tree.edges))
    return weights


class TestDepTree:
    def test_single_node(self):
        tree = DepTree(1, frozenset())
        assert tree.n == 1 and tree.edges == frozenset()

    def test_from_edges_normalises_order(self):
        tree = DepTree.from_edges(3, [(2, 1), (3, 2)])
        assert tree.edges == {(1, 2), (2, 3)}

    def test_wrong_edge_count(self):
        with pytest.raises(ValueError, match="needs 2 edges"):
            DepTree.from_edges(3, [(1, 2)])

    def test_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            DepTree.from_edges(3, [(1, 2), (2, 4)])

    def test_cycle(self):
        with pytest.raises(ValueError, match="cycle"):
            DepTree.from_edges(4, [(1, 2), (2, 3), (1, 3)])

    def test_self_loop_collapses_and_fails(self):
        # (2, 2) normalises onto the diagonal and breaks the range check
        with pytest.raises(ValueError):
            DepTree.from_edges(3, [(1, 2), (2, 2)])

    def test_adjacency(self):
        tree = DepTree.from_edges(6, SIX_WORD_EDGES)
        adj = tree.adjacency()
        assert sorted(adj[2]) == [1, 4, 5]
        assert adj[0] == []


class TestDistanceMatrix:
    def test_validation(self):
        with pytest.raises(ValueError, match="square"):
            DistanceMatrix(np.zeros((2, 3)))
        with pytest.raises(ValueError, match="symmetric"):
            DistanceMatrix([[0, 1], [2, 0]])
        with pytest.raises(ValueError, match="negative"):
            DistanceMatrix([[0, -1], [-1, 0]])
        with pytest.raises(ValueError, match="diagonal"):
            DistanceMatrix([[1, 1], [1, 0]])
        with pytest.raises(ValueError, match="non-finite"):
            DistanceMatrix([[0, np.nan], [np.nan, 0]])

    def test_upper_roundtrip(self):
        rng = np.random.default_rng(3)
        n = 7
        upper = rng.uniform(0, 5, size=n * (n - 1) // 2)
        dmat = DistanceMatrix.from_upper(n, upper)
        assert np.array_equal(dmat.upper(), upper)
        assert dmat.get(1, 2) == upper[0]
        assert dmat.get(2, 1) == upper[0]

    def test_from_upper_wrong_length(self):
        with pytest.raises(ValueError, match="upper-triangle"):
            DistanceMatrix.from_upper(4, [1.0, 2.0])


class TestTreeToDistances:
    def test_six_word_fixture(self):
        dmat = tree_to_distances(DepTree.from_edges(6, SIX_WORD_EDGES))
        assert dmat.get(4, 5) == 2  # path 4-2-5
        assert dmat.get(1, 6) == 3  # path 1-2-5-6
        assert dmat.get(3, 5) == 3  # path 3-4-2-5
        for i, j in SIX_WORD_EDGES:
            assert dmat.get(i, j) == 1

    def test_single_edge(self):
        assert tree_to_distances(DepTree.from_edges(2, [(1, 2)])).get(1, 2) == 1

    def test_star(self):
        star = DepTree.from_edges(5, [(1, k) for k in range(2, 6)])
        dmat = tree_to_distances(star)
        for i in range(2, 6):
            assert dmat.get(1, i) == 1
            for j in range(i + 1, 6):
                assert dmat.get(i, j) == 2

    def test_chain(self):
        chain = DepTree.from_edges(5, [(k, k + 1) for k in range(1, 5)])
        dmat = tree_to_distances(chain)
        for i in range(1, 6):
            for j in range(1, 6):
                assert dmat.get(i, j) == abs(i - j)

    def test_matches_floyd_warshall(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            tree = random_tree(int(rng.integers(2, 31)), rng)
            assert np.array_equal(tree_to_distances(tree).values, floyd_warshall(tree))


class TestMstPrim:
    def test_unique_mst_hand_case(self):
        dmat = DistanceMatrix.from_upper(3, [1.0, 3.0, 1.0])  # d12, d13, d23
        assert mst_prim(dmat).edges == {(1, 2), (2, 3)}

    def test_single_node(self):
        assert mst_prim(DistanceMatrix([[0.0]])).edges == frozenset()

    def test_recovers_tree_from_its_metric(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            tree = random_tree(int(rng.integers(2, 41)), rng)
            assert mst_prim(tree_to_distances(tree)).edges == tree.edges

    def test_weight_matches_brute_force(self):
        # exhaustive check over all labeled trees; the acceptance suite
        # repeats this at 500 instances
        rng = np.random.default_rng(17)
        for _ in range(40):
            n = int(rng.integers(2, 7))
            dmat = DistanceMatrix.from_upper(n, rng.uniform(0.1, 1.0, n * (n - 1) // 2))
            decoded = mst_prim(dmat)
            weight = sum(dmat.get(i, j) for i, j in decoded.edges)
            assert weight == pytest.approx(min(all_spanning_tree_weights(dmat.values)), abs=1e-12)

    def test_monotone_invariance(self):
        # the decoded tree depends only on the rank order of the weights
        rng = np.random.default_rng(23)
        for _ in range(20):
            n = int(rng.integers(3, 20))
            upper = rng.uniform(0.1, 2.0, n * (n - 1) // 2)
            base = mst_prim(DistanceMatrix.from_upper(n, upper)).edges
            for transform in (np.square, lambda v: 3 * v + 1, np.expm1):
                assert mst_prim(DistanceMatrix.from_upper(n, transform(upper))).edges == base

    def test_tie_breaking_is_lexicographic(self):
        # all-equal weights: growth from vertex 1 keeps choosing the
        # smallest endpoint pair, yielding the star centered on 1
        n = 6
        dmat = DistanceMatrix.from_upper(n, np.ones(n * (n - 1) // 2))
        assert mst_prim(dmat).edges == {(1, k) for k in range(2, n + 1)}


class TestDistancesToTree:
    def test_roundtrip_exact(self):
        rng = np.random.default_rng(29)
        for _ in range(50):
            tree = random_tree(int(rng.integers(2, 51)), rng)
            recovered = distances_to_tree(tree_to_distances(tree))
            assert recovered.exact
            assert recovered.tree.edges == tree.edges

    def test_reverse_roundtrip_on_tree_metrics(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            dmat = tree_to_distances(random_tree(int(rng.integers(2, 31)), rng))
            assert np.array_equal(
                tree_to_distances(distances_to_tree(dmat).tree).values, dmat.values
            )

    def test_fallback_on_perturbed_bands(self):
        # no entry is exactly 1, so recovery must go through the MST
        tree = DepTree.from_edges(4, [(1, 2), (2, 3), (3, 4)])
        values = tree_to_distances(tree).values.copy()
        values[values == 1.0] = 0.9
        values[values == 2.0] = 9.9
        values[values == 3.0] = 10.1
        recovered = distances_to_tree(DistanceMatrix(values))
        assert not recovered.exact
        assert recovered.tree.edges == tree.edges

    def test_fallback_when_unit_pairs_are_not_a_tree(self):
        # exactly n-1 pairs at distance 1, but they close a triangle
        values = np.full((4, 4), 5.0)
        np.fill_diagonal(values, 0.0)
        for i, j in ((0, 1), (1, 2), (0, 2)):
            values[i, j] = values[j, i] = 1.0
        recovered = distances_to_tree(DistanceMatrix(values))
        assert not recovered.exact
        assert len(recovered.tree.edges) == 3

    def test_single_node(self):
        recovered = distances_to_tree(DistanceMatrix([[0.0]]))
        assert recovered.exact and recovered.tree.n == 1


class TestPrufer:
    def test_star_sequence(self):
        tree = prufer_to_tree(5, [4, 4, 4])
        assert tree.edges == {(1, 4), (2, 4), (3, 4), (4, 5)}

    def test_tiny_sizes(self):
        assert prufer_to_tree(1, []).edges == frozenset()
        assert prufer_to_tree(2, []).edges == {(1, 2)}

    def test_bijection_n4(self):
        # 4^2 = 16 sequences must decode to 16 distinct labeled trees
        trees = {
            prufer_to_tree(4, seq).edges
            for seq in itertools.product(range(1, 5), repeat=2)
        }
        assert len(trees) == 16

    def test_validation(self):
        with pytest.raises(ValueError, match="length"):
            prufer_to_tree(5, [1, 2])
        with pytest.raises(ValueError, match="range"):
            prufer_to_tree(4, [0, 2])
        with pytest.raises(ValueError, match="at least 1"):
            prufer_to_tree(0, [])


class TestRandomTree:
    def test_valid_and_deterministic(self):
        for n in (2, 3, 10, 50):
            a = random_tree(n, np.random.default_rng(42))
            b = random_tree(n, np.random.default_rng(42))
            assert a.n == n and len(a.edges) == n - 1
            assert a.edges == b.edges

    def test_varies_with_seed(self):
        trees = {random_tree(12, np.random.default_rng(s)).edges for s in range(8)}
        assert len(trees) > 1
