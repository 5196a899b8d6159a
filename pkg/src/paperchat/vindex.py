"""Exact top-k vector store over unit vectors, with persistence.

Flat search only: the corpus is tens of documents, so every retrieval is
an exact inner-product scan, cross-checkable against a pure-Python oracle.
Scores are always computed in double precision.
"""

from __future__ import annotations

import struct
import threading
import zlib
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import Document, estimate_tokens
from .embed import EmbeddingVector
from .errors import (
    CorruptIndex,
    DimensionMismatch,
    DuplicateChunkId,
    EmptyIndex,
)

MAGIC = b"PCIX1"
_NORM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Chunk:
    """Unit of retrieval: one paragraph span of a document."""

    chunk_id: str
    doc_id: str
    paragraph_span: tuple[int, int]
    text: str
    token_estimate: int

    def __post_init__(self):
        start, end = self.paragraph_span
        # half-open span: end is one past the last paragraph index
        if start < 0 or end <= start:
            raise ValueError(f"invalid paragraph span {self.paragraph_span}")
        if not self.text.strip():
            raise ValueError("chunk text must be non-blank")


def chunk_document(doc: Document, max_tokens: int | None = None) -> list[Chunk]:
    """One chunk per paragraph by default; optionally merge consecutive
    paragraphs while the merged text stays within max_tokens.

    A paragraph larger than max_tokens still becomes its own chunk.
    """
    chunks: list[Chunk] = []
    pending: list[int] = []

    def flush():
        if not pending:
            return
        start, end = pending[0], pending[-1] + 1
        text = "\n\n".join(doc.paragraphs[i].text for i in pending)
        chunks.append(
            Chunk(
                chunk_id=f"{doc.doc_id}:{start:04d}-{end:04d}",
                doc_id=doc.doc_id,
                paragraph_span=(start, end),
                text=text,
                token_estimate=estimate_tokens(text),
            )
        )
        pending.clear()

    for paragraph in doc.paragraphs:
        if max_tokens is None:
            pending.append(paragraph.index)
            flush()
            continue
        if pending:
            candidate = "\n\n".join(
                doc.paragraphs[i].text for i in pending + [paragraph.index]
            )
            if estimate_tokens(candidate) > max_tokens:
                flush()
        pending.append(paragraph.index)
    flush()
    return chunks


@dataclass(frozen=True)
class SearchHit:
    chunk_id: str
    score: float


def _as_unit_array(vector: EmbeddingVector, dimension: int) -> np.ndarray:
    if vector.dimension != dimension:
        raise DimensionMismatch(
            f"vector is {vector.dimension}-d, index is {dimension}-d"
        )
    array = np.asarray(vector.values, dtype=np.float64)
    norm = float(np.linalg.norm(array))
    if abs(norm - 1.0) > _NORM_TOLERANCE:
        raise ValueError(f"index vectors must be unit norm, got |v| = {norm!r}")
    return array


class VectorIndex:
    """Flat cosine (inner-product over unit vectors) index.

    Concurrent searches are safe; mutation swaps the id/matrix pair
    atomically so a search never observes a partially added batch.
    """

    def __init__(self, dimension: int):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = dimension
        self._ids: tuple[str, ...] = ()
        self._matrix = np.empty((0, dimension), dtype=np.float64)
        self._id_set: set[str] = set()
        self._write_lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, chunk_id: str) -> bool:
        return chunk_id in self._id_set

    def entries(self) -> list[tuple[str, EmbeddingVector]]:
        ids, matrix = self._ids, self._matrix
        return [
            (chunk_id, EmbeddingVector(tuple(float(v) for v in row)))
            for chunk_id, row in zip(ids, matrix)
        ]

    def vector_for(self, chunk_id: str) -> EmbeddingVector:
        ids, matrix = self._ids, self._matrix
        try:
            position = ids.index(chunk_id)
        except ValueError:
            raise KeyError(chunk_id) from None
        return EmbeddingVector(tuple(float(v) for v in matrix[position]))


def add_vectors(
    index: VectorIndex, items: Iterable[tuple[str, EmbeddingVector]]
) -> VectorIndex:
    """Append entries; duplicate chunk_ids (existing or within the batch)
    are an error and nothing is added."""
    items = list(items)
    with index._write_lock:
        batch_ids: set[str] = set()
        rows = []
        for chunk_id, vector in items:
            if chunk_id in index._id_set or chunk_id in batch_ids:
                raise DuplicateChunkId(f"chunk_id {chunk_id!r} already indexed")
            batch_ids.add(chunk_id)
            rows.append(_as_unit_array(vector, index.dimension))
        if not rows:
            return index
        new_matrix = np.vstack([index._matrix] + [row[None, :] for row in rows])
        new_ids = index._ids + tuple(chunk_id for chunk_id, _ in items)
        # Swap both references only after full validation.
        index._matrix = new_matrix
        index._ids = new_ids
        index._id_set |= batch_ids
    return index


def search_topk(index: VectorIndex, query: EmbeddingVector, k: int) -> list[SearchHit]:
    """Exact top-k by inner product, descending score, ties by chunk_id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ids, matrix = index._ids, index._matrix
    if len(ids) == 0:
        raise EmptyIndex("search against an empty index")
    if query.dimension != index.dimension:
        raise DimensionMismatch(
            f"query is {query.dimension}-d, index is {index.dimension}-d"
        )
    scores = matrix @ np.asarray(query.values, dtype=np.float64)
    order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
    return [SearchHit(ids[i], float(scores[i])) for i in order[:k]]


def brute_force_topk(
    entries: Sequence[tuple[str, EmbeddingVector]],
    query: EmbeddingVector,
    k: int,
) -> list[SearchHit]:
    """Reference semantics for search_topk: every product computed in pure
    Python, full sort, same tie-break, truncated to k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not entries:
        raise EmptyIndex("search against an empty index")
    scored = []
    for chunk_id, vector in entries:
        if vector.dimension != query.dimension:
            raise DimensionMismatch(
                f"entry is {vector.dimension}-d, query is {query.dimension}-d"
            )
        score = sum(a * b for a, b in zip(vector.values, query.values))
        scored.append((chunk_id, score))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return [SearchHit(chunk_id, score) for chunk_id, score in scored[:k]]


# File format: MAGIC | u32 dimension | u32 count | count*dimension little-
# endian float64 | count * (u32 length + utf-8 chunk_id) | u32 CRC32 of
# everything before it.

def save_index(index: VectorIndex) -> bytes:
    ids, matrix = index._ids, index._matrix
    parts = [MAGIC, struct.pack("<II", index.dimension, len(ids))]
    parts.append(matrix.astype("<f8", copy=False).tobytes(order="C"))
    for chunk_id in ids:
        encoded = chunk_id.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def load_index(data: bytes) -> VectorIndex:
    if len(data) < len(MAGIC) + 8 + 4:
        raise CorruptIndex("index bytes shorter than any valid file")
    if data[: len(MAGIC)] != MAGIC:
        raise CorruptIndex("bad magic bytes")
    body, (checksum,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != checksum:
        raise CorruptIndex("checksum mismatch")

    offset = len(MAGIC)
    dimension, count = struct.unpack_from("<II", body, offset)
    offset += 8
    if dimension < 1:
        raise CorruptIndex(f"invalid dimension {dimension}")
    vector_bytes = count * dimension * 8
    if len(body) < offset + vector_bytes:
        raise CorruptIndex("truncated vector payload")
    matrix = np.frombuffer(
        body, dtype="<f8", count=count * dimension, offset=offset
    ).reshape(count, dimension).astype(np.float64, copy=True)
    offset += vector_bytes

    ids = []
    for _ in range(count):
        if len(body) < offset + 4:
            raise CorruptIndex("truncated id table")
        (length,) = struct.unpack_from("<I", body, offset)
        offset += 4
        if len(body) < offset + length:
            raise CorruptIndex("truncated chunk_id string")
        ids.append(body[offset : offset + length].decode("utf-8"))
        offset += length
    if offset != len(body):
        raise CorruptIndex(f"{len(body) - offset} trailing bytes after id table")
    if len(set(ids)) != len(ids):
        raise CorruptIndex("duplicate chunk_ids in file")

    index = VectorIndex(dimension)
    index._ids = tuple(ids)
    index._matrix = matrix
    index._id_set = set(ids)
    return index
