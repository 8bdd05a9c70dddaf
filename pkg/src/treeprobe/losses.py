"""The two rival training objectives over identical parameters.

The regression loss pushes every pairwise prediction toward the gold
tree distance (L1, all pairs). The margin loss only compares the total
predicted weight of the gold tree against the minimum spanning tree of
the current predictions, so it can be driven to zero by merely
separating edges from non-edges. Both return analytic gradients with
respect to the shared parameter matrix.

Gradients are assembled through a graph-Laplacian identity: for any
symmetric coefficient matrix C with zero diagonal,
``sum_{i<j} C_ij (h_i - h_j)(h_i - h_j)^T = H^T (diag(C 1) - C) H``,
which turns the per-pair outer-product sums into three small matmuls.
"""

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingSequence
from .graph import DepTree, mst_prim, tree_to_distances
from .model import NORM_EPSILON, ProbeParams, predict_matrix


@dataclass
class LossValue:
    value: float
    grad: np.ndarray  # (rank, dim)
    aux: DepTree | None = None  # predicted tree, margin loss only


def _check_pair(params: ProbeParams, emb: EmbeddingSequence, gold: DepTree):
    if emb.n != gold.n:
        raise ValueError(f"embedding has {emb.n} rows, tree has {gold.n} nodes")
    if emb.n < 2:
        raise ValueError("loss needs at least 2 words")
    if emb.dim != params.dim:
        raise ValueError(
            f"embedding dim {emb.dim} does not match parameter dim {params.dim}"
        )


def _coefficient_grad(
    params: ProbeParams,
    emb: EmbeddingSequence,
    coeff: np.ndarray,
    pred_values: np.ndarray,
    squared: bool,
) -> np.ndarray:
    """Gradient of sum_{i<j} coeff_ij * p_ij with respect to the parameters.

    ``coeff`` must be symmetric with zero diagonal. For the unsquared
    distance the chain rule divides by the distance; pairs closer than
    NORM_EPSILON contribute zero (subgradient at the kink).
    """
    h = np.asarray(emb.vectors, dtype=np.float64)
    if squared:
        weights = 2.0 * coeff
    else:
        safe = np.where(pred_values < NORM_EPSILON, np.inf, pred_values)
        weights = coeff / safe
    proj = h @ params.matrix.T
    lap_h = weights.sum(axis=1)[:, None] * h - weights @ h
    return proj.T @ lap_h


def probe_local_loss(
    params: ProbeParams, emb: EmbeddingSequence, gold: DepTree, squared: bool
) -> LossValue:
    """L1 regression of predicted onto gold distances over all word pairs."""
    _check_pair(params, emb, gold)
    pred = predict_matrix(params, emb, squared=squared).distances.values
    target = tree_to_distances(gold).values
    diff = target - pred
    value = 0.5 * float(np.abs(diff).sum())
    coeff = -np.sign(diff)
    grad = _coefficient_grad(params, emb, coeff, pred, squared)
    return LossValue(value, grad)


def probe_global_contribution(local: LossValue, n: int) -> LossValue:
    """Weight a sentence's local loss by 1/n^2.

    Longer sentences have quadratically more pairs; this normalisation
    makes each sentence contribute on the same scale to the corpus
    objective.
    """
    if n < 2:
        raise ValueError("sentence length must be >= 2")
    scale = 1.0 / (n * n)
    return LossValue(local.value * scale, local.grad * scale, local.aux)


def perceptron_local_loss(
    params: ProbeParams, emb: EmbeddingSequence, gold: DepTree, squared: bool
) -> LossValue:
    """Margin between the gold tree's predicted weight and the MST's.

    The MST of the current predictions is held fixed for the gradient
    (the standard structured subgradient); edges present in both trees
    cancel. Zero exactly when the decoded tree weighs the same as gold.
    """
    _check_pair(params, emb, gold)
    prediction = predict_matrix(params, emb, squared=squared)
    pred = prediction.distances.values
    decoded = mst_prim(prediction.distances)
    coeff = np.zeros_like(pred)
    for i, j in gold.edges:
        coeff[i - 1, j - 1] += 1.0
        coeff[j - 1, i - 1] += 1.0
    for i, j in decoded.edges:
        coeff[i - 1, j - 1] -= 1.0
        coeff[j - 1, i - 1] -= 1.0
    value = 0.5 * float((coeff * pred).sum())
    # the MST minimises total weight, so the margin is >= 0 up to float
    # associativity; clamp the sub-epsilon negatives away
    value = max(value, 0.0)
    grad = _coefficient_grad(params, emb, coeff, pred, squared)
    return LossValue(value, grad, aux=decoded)


def batch_objective(
    kind: str,
    params: ProbeParams,
    batch: list,
    squared: bool,
) -> LossValue:
    """Mean objective over a batch of (embedding, gold tree) pairs.

    Regression sentences are weighted by 1/n^2 before averaging; margin
    sentences enter unweighted. Gradients aggregate the same way.
    """
    if not batch:
        raise ValueError("batch must be non-empty")
    if kind not in ("probe", "perceptron"):
        raise ValueError(f"unknown objective kind {kind!r}")
    total = 0.0
    grad = np.zeros_like(params.matrix)
    for emb, gold in batch:
        if kind == "probe":
            local = probe_local_loss(params, emb, gold, squared)
            local = probe_global_contribution(local, gold.n)
        else:
            local = perceptron_local_loss(params, emb, gold, squared)
        total += local.value
        grad += local.grad
    scale = 1.0 / len(batch)
    return LossValue(total * scale, grad * scale)
