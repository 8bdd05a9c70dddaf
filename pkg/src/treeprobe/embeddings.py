"""Per-word embedding containers and synthetic embedding generators.

The on-disk container ("SDEB") is little-endian throughout: magic
``53 44 45 42``, version u32 = 1, sentence count u64, dim u32; then per
sentence an id-length u32, the id's UTF-8 bytes, n u32, and n*dim
float32 values row-major. No padding, no compression.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .graph import DepTree, DistanceMatrix, tree_to_distances

MAGIC = b"SDEB"
VERSION = 1


class StoreFormatError(ValueError):
    """The stream is not an embedding container of a supported version."""


class StoreCorruptionError(ValueError):
    """The container header promises more than the payload holds."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (at byte offset {offset})")


class StoreDataError(ValueError):
    """A record holds non-finite values."""


class AlignmentError(ValueError):
    """Sentences and embedding sequences do not pair up."""


@dataclass
class EmbeddingSequence:
    """One sentence's word vectors, row i = word i+1."""

    sentence_id: str
    vectors: np.ndarray  # (n, d)

    def __post_init__(self):
        v = np.asarray(self.vectors)
        if v.ndim != 2:
            raise ValueError(f"vectors must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError(f"sequence {self.sentence_id!r} has non-finite values")
        self.vectors = v

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass
class EmbeddingStore:
    dim: int
    sequences: list

    def __post_init__(self):
        for seq in self.sequences:
            if seq.dim != self.dim:
                raise ValueError(
                    f"sequence {seq.sentence_id!r} has dim {seq.dim}, "
                    f"store has dim {self.dim}"
                )

    def __len__(self) -> int:
        return len(self.sequences)


def align_pairs(sentences, sequences) -> list:
    """Zip sentences with their embedding sequences, checking the contract.

    Alignment is positional; lengths must agree word-for-word, and when
    a sequence carries a non-empty id it must match the sentence id.
    """
    if len(sentences) != len(sequences):
        raise AlignmentError(
            f"{len(sentences)} sentences but {len(sequences)} embedding sequences"
        )
    pairs = []
    for k, (sent, seq) in enumerate(zip(sentences, sequences)):
        if seq.n != len(sent.tokens):
            raise AlignmentError(
                f"sentence {k + 1} ({sent.id!r}) has {len(sent.tokens)} words "
                f"but its embedding sequence has {seq.n} rows"
            )
        if seq.sentence_id and sent.id and seq.sentence_id != sent.id:
            raise AlignmentError(
                f"sentence {k + 1}: treebank id {sent.id!r} != container id "
                f"{seq.sentence_id!r}"
            )
        pairs.append((sent, seq))
    return pairs


def write_store(store: EmbeddingStore, stream) -> None:
    """Write the container format; float32 little-endian payload."""
    stream.write(MAGIC)
    stream.write(struct.pack("<IQI", VERSION, len(store.sequences), store.dim))
    for seq in store.sequences:
        ident = seq.sentence_id.encode("utf-8")
        stream.write(struct.pack("<I", len(ident)))
        stream.write(ident)
        stream.write(struct.pack("<I", seq.n))
        stream.write(np.ascontiguousarray(seq.vectors, dtype="<f4").tobytes())


def read_store(stream) -> EmbeddingStore:
    """Read and validate a container written by :func:`write_store`."""
    data = stream.read()
    if len(data) < 4 or data[:4] != MAGIC:
        raise StoreFormatError("missing container magic")
    if len(data) < 20:
        raise StoreCorruptionError("truncated header", len(data))
    version, count, dim = struct.unpack_from("<IQI", data, 4)
    if version != VERSION:
        raise StoreFormatError(f"unsupported container version {version}")
    offset = 20
    sequences = []
    for k in range(count):
        if offset + 4 > len(data):
            raise StoreCorruptionError(
                f"record {k + 1} of {count} missing", offset
            )
        (id_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        if offset + id_len + 4 > len(data):
            raise StoreCorruptionError(f"record {k + 1} truncated", offset)
        ident = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        (n,) = struct.unpack_from("<I", data, offset)
        offset += 4
        nbytes = n * dim * 4
        if offset + nbytes > len(data):
            raise StoreCorruptionError(f"record {k + 1} payload truncated", offset)
        vectors = np.frombuffer(data, dtype="<f4", count=n * dim, offset=offset)
        offset += nbytes
        vectors = vectors.reshape(n, dim).copy()
        if not np.all(np.isfinite(vectors)):
            raise StoreDataError(f"sequence {ident!r} has non-finite values")
        sequences.append(EmbeddingSequence(ident, vectors))
    if offset != len(data):
        raise StoreCorruptionError("trailing bytes after last record", offset)
    return EmbeddingStore(dim, sequences)


def random_orthogonal(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix from QR of a Gaussian draw."""
    gauss = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(gauss)
    return q * np.sign(np.diag(r))


def synth_tree_embeddings(
    tree: DepTree,
    dim: int,
    noise: float,
    seed: int,
    sentence_id: str = "",
) -> EmbeddingSequence:
    """Embeddings whose squared Euclidean distances equal the tree metric.

    Word i is placed at the 0/1 indicator of the edges on the path from
    word 1 to word i, so two words differ in exactly the coordinates of
    the path between them. The points are padded to ``dim`` dimensions,
    rotated by a seeded random orthogonal map (distance-preserving), and
    optionally perturbed with Gaussian noise of standard deviation
    ``noise``.
    """
    n = tree.n
    if dim < n - 1:
        raise ValueError(f"dim {dim} too small for n={n} (need at least {n - 1})")
    if noise < 0:
        raise ValueError("noise must be >= 0")
    edge_index = {edge: k for k, edge in enumerate(sorted(tree.edges))}
    coords = np.zeros((n, dim))
    adj = tree.adjacency()
    seen = [False] * (n + 1)
    seen[1] = True
    stack = [1]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                k = edge_index[(min(u, v), max(u, v))]
                coords[v - 1] = coords[u - 1]
                coords[v - 1, k] = 1.0
                stack.append(v)
    rng = np.random.default_rng(seed)
    rotation = random_orthogonal(dim, rng)
    vectors = coords @ rotation.T
    if noise > 0:
        vectors = vectors + rng.normal(0.0, noise, size=vectors.shape)
    return EmbeddingSequence(sentence_id, vectors)


def synth_nearfar_distances(tree: DepTree, seed: int) -> DistanceMatrix:
    """Predicted-distance matrix that only separates edges from non-edges.

    Gold edges get values in [0.9, 1.1] and every other pair values in
    [9.9, 10.1], sampled from ``seed``. The bands do not overlap, so the
    MST of the output is always the generating tree, while the rank
    order within each band is scrambled.
    """
    n = tree.n
    rng = np.random.default_rng(seed)
    gold = tree_to_distances(tree).values
    iu = np.triu_indices(n, k=1)
    is_edge = gold[iu] == 1.0
    upper = rng.uniform(9.9, 10.1, size=len(iu[0]))
    upper[is_edge] = rng.uniform(0.9, 1.1, size=int(is_edge.sum()))
    return DistanceMatrix.from_upper(n, upper)
