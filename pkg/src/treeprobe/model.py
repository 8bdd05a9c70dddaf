"""The learned pairwise distance function and its gradients.

Both extractor variants share one trainable object: a ``rank x dim``
matrix that maps embedding differences into a low-rank space, where the
(squared) Euclidean norm serves as the predicted distance between two
words. The induced Gram form is positive semi-definite with rank at
most ``rank`` by construction, so predictions are always non-negative.
"""

import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .embeddings import EmbeddingSequence
from .graph import DistanceMatrix

CHECKPOINT_MAGIC = b"SPBM"
CHECKPOINT_VERSION = 1

# below this, the unsquared distance gradient is defined as zero
# (any subgradient is valid at the norm's kink)
NORM_EPSILON = 1e-9


class StoreError(ValueError):
    """Malformed checkpoint stream."""


@dataclass
class ProbeParams:
    """Trainable projection; ``matrix`` has shape (rank, dim)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2:
            raise ValueError(f"parameter matrix must be 2-D, got shape {m.shape}")
        if m.shape[0] > m.shape[1]:
            raise ValueError(
                f"rank {m.shape[0]} exceeds embedding dim {m.shape[1]}"
            )
        if not np.all(np.isfinite(m)):
            raise ValueError("parameter matrix has non-finite entries")
        self.matrix = m

    @property
    def rank_budget(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def copy(self) -> "ProbeParams":
        return ProbeParams(self.matrix.copy())


class PairwisePrediction(NamedTuple):
    distances: DistanceMatrix
    squared: bool


def init_params(rank: int, dim: int, rng: np.random.Generator) -> ProbeParams:
    """Uniform init on [-s, s] with s = sqrt(1/dim).

    Keeps initial predicted distances O(1) for unit-scale embeddings.
    """
    scale = np.sqrt(1.0 / dim)
    return ProbeParams(rng.uniform(-scale, scale, size=(rank, dim)))


def distance(params: ProbeParams, h_i, h_j, squared: bool = False) -> float:
    """Predicted distance between two embedded words.

    The squared variant returns the squared norm of the projected
    difference; both are symmetric in the arguments and zero when the
    embeddings coincide.
    """
    h_i = np.asarray(h_i, dtype=np.float64)
    h_j = np.asarray(h_j, dtype=np.float64)
    if h_i.shape != (params.dim,) or h_j.shape != (params.dim,):
        raise ValueError(
            f"expected vectors of length {params.dim}, "
            f"got {h_i.shape} and {h_j.shape}"
        )
    proj = params.matrix @ (h_i - h_j)
    sq = float(proj @ proj)
    return sq if squared else float(np.sqrt(sq))


def predict_matrix(
    params: ProbeParams, emb: EmbeddingSequence, squared: bool = False
) -> PairwisePrediction:
    """All pairwise predicted distances for one sentence, vectorised."""
    if emb.dim != params.dim:
        raise ValueError(
            f"embedding dim {emb.dim} does not match parameter dim {params.dim}"
        )
    proj = np.asarray(emb.vectors, dtype=np.float64) @ params.matrix.T
    sq_norms = np.einsum("ij,ij->i", proj, proj)
    gram = proj @ proj.T
    sq = sq_norms[:, None] + sq_norms[None, :] - 2.0 * gram
    np.maximum(sq, 0.0, out=sq)
    values = sq if squared else np.sqrt(sq)
    values = np.triu(values, k=1)
    values = values + values.T
    return PairwisePrediction(DistanceMatrix(values), squared)


def grad_squared_distance(params: ProbeParams, h_i, h_j) -> np.ndarray:
    """Gradient of the squared distance with respect to the parameters.

    For the unsquared distance the caller scales this by 1/(2 d); when
    d falls below NORM_EPSILON that contribution is defined as zero.
    """
    h_i = np.asarray(h_i, dtype=np.float64)
    h_j = np.asarray(h_j, dtype=np.float64)
    if h_i.shape != (params.dim,) or h_j.shape != (params.dim,):
        raise ValueError(
            f"expected vectors of length {params.dim}, "
            f"got {h_i.shape} and {h_j.shape}"
        )
    delta = h_i - h_j
    return 2.0 * np.outer(params.matrix @ delta, delta)


def apply_dropout(emb: EmbeddingSequence, rate: float, seed) -> EmbeddingSequence:
    """Inverted dropout on embedding coordinates.

    Each coordinate is zeroed independently with probability ``rate``
    and the survivors are scaled by 1/(1-rate), so the expectation over
    masks equals the input. ``seed`` may be an integer or a Generator.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return emb
    rng = np.random.default_rng(seed)
    mask = rng.random(emb.vectors.shape) >= rate
    vectors = np.asarray(emb.vectors, dtype=np.float64) * mask / (1.0 - rate)
    return EmbeddingSequence(emb.sentence_id, vectors)


def save_checkpoint(params: ProbeParams, squared: bool, stream) -> None:
    """Parameter checkpoint: header plus float64 little-endian payload."""
    stream.write(CHECKPOINT_MAGIC)
    stream.write(
        struct.pack(
            "<IIIB", CHECKPOINT_VERSION, params.rank_budget, params.dim, int(squared)
        )
    )
    stream.write(np.ascontiguousarray(params.matrix, dtype="<f8").tobytes())


def load_checkpoint(stream) -> tuple[ProbeParams, bool]:
    data = stream.read()
    if len(data) < 4 or data[:4] != CHECKPOINT_MAGIC:
        raise StoreError("missing checkpoint magic")
    if len(data) < 17:
        raise StoreError("truncated checkpoint header")
    version, rank, dim, squared = struct.unpack_from("<IIIB", data, 4)
    if version != CHECKPOINT_VERSION:
        raise StoreError(f"unsupported checkpoint version {version}")
    expected = 17 + rank * dim * 8
    if len(data) != expected:
        raise StoreError(
            f"checkpoint payload is {len(data)} bytes, expected {expected}"
        )
    matrix = np.frombuffer(data, dtype="<f8", count=rank * dim, offset=17)
    return ProbeParams(matrix.reshape(rank, dim).copy()), bool(squared)
