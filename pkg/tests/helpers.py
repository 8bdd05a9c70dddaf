"""Shared test utilities: corpus builders and finite-difference oracles."""

import numpy as np

from treeprobe import conllu, embeddings, seeding
from treeprobe.cli import _random_tree, _tree_sentence
from treeprobe.graph import mst_prim
from treeprobe.model import predict_matrix


def synth_corpus(count, min_n, max_n, dim, noise, seed):
    """Random trees with placeholder sentences plus exact-metric embeddings."""
    sentences, sequences = [], []
    for k in range(count):
        n = int(seeding.stream(seed, "size", k).integers(min_n, max_n + 1))
        tree = _random_tree(n, seed, k)
        ident = f"synth-{k + 1}"
        sentences.append(_tree_sentence(tree, ident))
        sequences.append(
            embeddings.synth_tree_embeddings(
                tree, dim, noise, seeding.child_seed(seed, "emb", k), ident
            )
        )
    return sentences, sequences


def split_corpus(sentences, sequences, ratios, seed):
    """Split and return (TreebankSplit, store ordered train||dev||test)."""
    train_idx, dev_idx, test_idx, _ = conllu.split_indices(sentences, 0, ratios, seed)
    split = conllu.TreebankSplit(
        [sentences[i] for i in train_idx],
        [sentences[i] for i in dev_idx],
        [sentences[i] for i in test_idx],
        conllu.SplitProvenance("synthetic", []),
    )
    store = embeddings.EmbeddingStore(
        sequences[0].dim,
        [sequences[i] for i in train_idx]
        + [sequences[i] for i in dev_idx]
        + [sequences[i] for i in test_idx],
    )
    return split, store


def fd_gradient(func, matrix: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function over a matrix."""
    grad = np.zeros_like(matrix)
    for idx in np.ndindex(*matrix.shape):
        bumped = matrix.copy()
        bumped[idx] += step
        hi = func(bumped)
        bumped[idx] -= 2 * step
        lo = func(bumped)
        grad[idx] = (hi - lo) / (2 * step)
    return grad


def rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-12)
    return float(np.max(np.abs(analytic - numeric)) / scale)


def mst_tie_margin(params, emb, squared: bool) -> float:
    """Distance to the nearest MST tie: min over non-tree pairs of
    weight(pair) minus the heaviest edge on the tree path joining it."""
    pred = predict_matrix(params, emb, squared=squared).distances
    decoded = mst_prim(pred)
    adj = decoded.adjacency()
    margin = np.inf
    for i in range(1, emb.n + 1):
        # path weights from i to every other node, via DFS over the tree
        stack = [(i, 0.0)]
        seen = {i}
        heaviest = {}
        while stack:
            u, top = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    heaviest[v] = max(top, pred.get(u, v))
                    stack.append((v, heaviest[v]))
        for j in range(i + 1, emb.n + 1):
            if (i, j) not in decoded.edges:
                margin = min(margin, pred.get(i, j) - heaviest[j])
    return float(margin)
