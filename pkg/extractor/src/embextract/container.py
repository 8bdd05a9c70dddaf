"""Flat binary container for per-sentence embedding matrices.

Layout, all little-endian:

    magic   4 bytes  b"SDEB"
    version u32      currently 1
    count   u64      number of records
    dim     u32      embedding width shared by every record
    then per record:
        idlen   u32     byte length of the UTF-8 sentence id
        id      idlen bytes
        n       u32     word count
        data    n * dim float32

Record order is the order sentences were extracted in.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"SDEB"
VERSION = 1


@dataclass(frozen=True)
class Record:
    """One sentence's embeddings: id plus an (n, dim) float32 matrix."""

    sentence_id: str
    vectors: np.ndarray


def container_bytes(dim: int, records: list[Record]) -> bytes:
    """Serialise records into the container byte layout."""
    if dim <= 0:
        raise ValueError(f"dim must be positive, got {dim}")
    parts = [MAGIC, struct.pack("<I", VERSION), struct.pack("<Q", len(records)), struct.pack("<I", dim)]
    for rec in records:
        mat = np.ascontiguousarray(rec.vectors, dtype="<f4")
        if mat.ndim != 2 or mat.shape[1] != dim:
            raise ValueError(
                f"record {rec.sentence_id!r}: expected shape (n, {dim}), got {mat.shape}"
            )
        ident = rec.sentence_id.encode("utf-8")
        parts.append(struct.pack("<I", len(ident)))
        parts.append(ident)
        parts.append(struct.pack("<I", mat.shape[0]))
        parts.append(mat.tobytes())
    return b"".join(parts)


def write_container(path: str | Path, dim: int, records: list[Record]) -> None:
    """Write the container atomically (tmp file then rename)."""
    target = Path(path)
    tmp = target.with_name(target.name + ".tmp")
    tmp.write_bytes(container_bytes(dim, records))
    tmp.replace(target)
