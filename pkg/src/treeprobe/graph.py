"""Undirected dependency trees, tree metrics, and MST decoding.

A tree over n words and its matrix of pairwise path lengths carry the
same information: the edges are exactly the pairs at distance 1, and the
matrix is recovered from the tree by an all-pairs shortest-path pass.
This module converts in both directions and decodes trees from arbitrary
non-negative score matrices with Prim's algorithm, which only needs the
rank order of the scores to be right.
"""

import heapq
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

Edge = tuple[int, int]


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n + 1))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        """Merge the two classes; False if already joined."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


@dataclass(frozen=True)
class DepTree:
    """Undirected spanning tree over words 1..n.

    Edges are unordered pairs stored as (i, j) tuples with i < j, 1-based.
    Construction validates the spanning-tree property: exactly n - 1
    edges, all endpoints in range, connected and acyclic.
    """

    n: int
    edges: frozenset

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"tree must have at least one node, got n={self.n}")
        if len(self.edges) != self.n - 1:
            raise ValueError(
                f"spanning tree over {self.n} nodes needs {self.n - 1} edges, "
                f"got {len(self.edges)}"
            )
        uf = _UnionFind(self.n)
        for i, j in self.edges:
            if not (1 <= i < j <= self.n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={self.n}")
            if not uf.union(i, j):
                raise ValueError(f"edge ({i}, {j}) closes a cycle")
        # n-1 successful unions on n nodes imply connectivity

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Edge]) -> "DepTree":
        """Build a tree from edge pairs in either endpoint order."""
        normalized = frozenset((min(i, j), max(i, j)) for i, j in edges)
        return cls(n, normalized)

    def adjacency(self) -> list[list[int]]:
        """Neighbor lists indexed 1..n (index 0 unused)."""
        adj: list[list[int]] = [[] for _ in range(self.n + 1)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj


class DistanceMatrix:
    """Symmetric pairwise distances with zero diagonal.

    Wraps an (n, n) float array where entry [i-1, j-1] is the distance
    between words i and j. Values must be finite and non-negative;
    symmetry is enforced at construction.
    """

    __slots__ = ("values",)

    def __init__(self, values):
        v = np.array(values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 1:
            raise ValueError(f"expected square matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("distance matrix contains non-finite values")
        if np.any(v < 0):
            raise ValueError("distance matrix contains negative values")
        if not np.array_equal(v, v.T):
            raise ValueError("distance matrix is not symmetric")
        if np.any(np.diag(v) != 0):
            raise ValueError("distance matrix has a non-zero diagonal")
        self.values = v

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_upper(cls, n: int, upper) -> "DistanceMatrix":
        """Build from the condensed upper triangle, pair order (1,2), (1,3), ..."""
        upper = np.asarray(upper, dtype=np.float64)
        if upper.shape != (n * (n - 1) // 2,):
            raise ValueError(
                f"expected {n * (n - 1) // 2} upper-triangle values, got {upper.shape}"
            )
        v = np.zeros((n, n))
        iu = np.triu_indices(n, k=1)
        v[iu] = upper
        v[(iu[1], iu[0])] = upper
        return cls(v)

    def upper(self) -> np.ndarray:
        """Condensed upper triangle, pair order (1,2), (1,3), ..., (n-1,n)."""
        return self.values[np.triu_indices(self.n, k=1)]

    def get(self, i: int, j: int) -> float:
        """Distance between words i and j, 1-based."""
        return float(self.values[i - 1, j - 1])


class TreeRecovery(NamedTuple):
    """Tree decoded from a distance matrix; exact=True when the pairs at
    distance 1 already formed a spanning tree and no MST fallback ran."""

    tree: DepTree
    exact: bool


def tree_to_distances(tree: DepTree) -> DistanceMatrix:
    """All-pairs path lengths of a tree, by BFS from every node.

    Equivalent to Floyd-Warshall with unit edge weights, in O(n^2).
    """
    n = tree.n
    adj = tree.adjacency()
    values = np.zeros((n, n))
    for start in range(1, n + 1):
        dist = values[start - 1]
        seen = [False] * (n + 1)
        seen[start] = True
        frontier = [start]
        depth = 0
        while frontier:
            depth += 1
            nxt = []
            for u in frontier:
                for v in adj[u]:
                    if not seen[v]:
                        seen[v] = True
                        dist[v - 1] = depth
                        nxt.append(v)
            frontier = nxt
    return DistanceMatrix(values)


def mst_prim(dmat: DistanceMatrix) -> DepTree:
    """Minimum spanning tree of the complete graph weighted by ``dmat``.

    Grows from vertex 1. Among frontier edges of equal weight the one
    with the lexicographically smallest (min endpoint, max endpoint)
    wins, so the output is deterministic under ties.
    """
    n = dmat.n
    if n == 1:
        return DepTree(1, frozenset())
    w = dmat.values
    idx = np.arange(n)
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    # best frontier edge per outside vertex v: weight and endpoints (a < b)
    best_w = w[0].copy()
    best_a = np.zeros(n, dtype=np.int64)
    best_b = idx.copy()
    best_w[0] = np.inf
    edges = []
    for _ in range(n - 1):
        order = np.lexsort((best_b, best_a, best_w))
        v = int(order[0])
        edges.append((int(best_a[v]) + 1, int(best_b[v]) + 1))
        in_tree[v] = True
        best_w[v] = np.inf
        cand_w = w[v]
        cand_a = np.minimum(v, idx)
        cand_b = np.maximum(v, idx)
        better = (cand_w < best_w) | (
            (cand_w == best_w)
            & ((cand_a < best_a) | ((cand_a == best_a) & (cand_b < best_b)))
        )
        better &= ~in_tree
        best_w[better] = cand_w[better]
        best_a[better] = cand_a[better]
        best_b[better] = cand_b[better]
    return DepTree.from_edges(n, edges)


def distances_to_tree(dmat: DistanceMatrix) -> TreeRecovery:
    """Recover a tree from a distance matrix.

    When the matrix is an exact tree metric the pairs at distance 1 are
    precisely the tree's edges, and that tree is returned with
    exact=True. Any other input falls back to the MST of the matrix,
    which still recovers the tree whenever the rank order separates
    edges from non-edges.
    """
    n = dmat.n
    iu, ju = np.triu_indices(n, k=1)
    near = np.abs(dmat.values[iu, ju] - 1.0) < 1e-9
    if n == 1 or int(near.sum()) == n - 1:
        candidate = [(int(i) + 1, int(j) + 1) for i, j in zip(iu[near], ju[near])]
        try:
            return TreeRecovery(DepTree.from_edges(n, candidate), True)
        except ValueError:
            pass
    return TreeRecovery(mst_prim(dmat), False)


def prufer_to_tree(n: int, sequence) -> DepTree:
    """Decode a Prufer sequence (values in 1..n, length n-2) into a tree."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n == 1:
        return DepTree(1, frozenset())
    seq = [int(s) for s in sequence]
    if len(seq) != n - 2:
        raise ValueError(f"sequence for n={n} must have length {n - 2}, got {len(seq)}")
    if seq and not all(1 <= s <= n for s in seq):
        raise ValueError("sequence values out of range")
    degree = [1] * (n + 1)
    for s in seq:
        degree[s] += 1
    leaves = [v for v in range(1, n + 1) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for s in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, s))
        degree[leaf] -= 1
        degree[s] -= 1
        if degree[s] == 1:
            heapq.heappush(leaves, s)
    a = heapq.heappop(leaves)
    b = heapq.heappop(leaves)
    edges.append((a, b))
    return DepTree.from_edges(n, edges)


def random_tree(n: int, rng: np.random.Generator) -> DepTree:
    """Uniformly random labeled tree on n nodes, via a random Prufer sequence."""
    if n <= 2:
        return prufer_to_tree(n, [])
    seq = rng.integers(1, n + 1, size=n - 2)
    return prufer_to_tree(n, seq)
