"""Embedding backends, batching, caching, and vector normalization.

Vectors are plain tuples of Python floats; everything returned to callers
is unit-norm regardless of which backend produced it.
"""

from __future__ import annotations

import hashlib
import math
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

from .errors import BackendError, DimensionMismatch, ZeroVector
from .llm import _post_json, with_retry

DEFAULT_MOCK_DIMENSION = 64
DEFAULT_BATCH_SIZE = 16


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    model_id: str = ""

    def __post_init__(self):
        if not self.values:
            raise ValueError("embedding must have at least one component")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding contains non-finite values")

    @property
    def dimension(self) -> int:
        return len(self.values)

    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.values))

    def dot(self, other: "EmbeddingVector") -> float:
        if len(self.values) != len(other.values):
            raise DimensionMismatch(
                f"dot of {len(self.values)}-d and {len(other.values)}-d vectors"
            )
        return sum(a * b for a, b in zip(self.values, other.values))


def normalize_vector(v: EmbeddingVector) -> EmbeddingVector:
    """Scale to unit L2 norm; zero vectors cannot be normalized."""
    norm = v.norm()
    if norm == 0.0:
        raise ZeroVector("cannot normalize an all-zero vector")
    return EmbeddingVector(
        values=tuple(value / norm for value in v.values),
        model_id=v.model_id,
    )


def _stable_gram_hash(gram: str) -> int:
    # Process-independent, unlike builtin hash(); 8 bytes is plenty.
    return int.from_bytes(
        hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest(), "little"
    )


def mock_embed(text: str, d: int = DEFAULT_MOCK_DIMENSION) -> EmbeddingVector:
    """Deterministic offline embedder: signed character-3-gram hashing.

    Identical inputs give bit-identical vectors across processes and
    platforms; texts sharing many 3-grams land closer than unrelated ones.
    Texts shorter than 3 characters map to a fixed unit basis vector.
    """
    if d < 2:
        raise ValueError(f"mock embedding dimension must be >= 2, got {d}")
    model_id = f"mock-3gram-{d}"
    lowered = text.lower()
    buckets = [0.0] * d
    for i in range(len(lowered) - 2):
        h = _stable_gram_hash(lowered[i : i + 3])
        sign = 1.0 if (h >> 62) & 1 == 0 else -1.0
        buckets[h % d] += sign
    if all(b == 0.0 for b in buckets):
        buckets[0] = 1.0
    return normalize_vector(EmbeddingVector(tuple(buckets), model_id=model_id))


def content_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class EmbeddingCache:
    """Map from (model_id, content hash) to vectors, bit-exact on lookup.

    Concurrent readers are safe; writes are serialized by a lock.
    """

    def __init__(self):
        self._entries: dict[tuple[str, str], EmbeddingVector] = {}
        self._lock = threading.Lock()

    def get(self, model_id: str, text: str) -> EmbeddingVector | None:
        return self._entries.get((model_id, content_hash(text)))

    def put(self, model_id: str, text: str, vector: EmbeddingVector) -> None:
        with self._lock:
            self._entries[(model_id, content_hash(text))] = vector

    def __len__(self) -> int:
        return len(self._entries)


class EmbeddingBackend(Protocol):
    model_id: str
    dimension: int

    def embed_batch(self, texts: Sequence[str]) -> list[list[float]]: ...


class MockEmbeddingBackend:
    """Offline backend over mock_embed; counts batch calls for tests."""

    def __init__(self, dimension: int = DEFAULT_MOCK_DIMENSION):
        self.dimension = dimension
        self.model_id = f"mock-3gram-{dimension}"
        self.batch_calls = 0

    def embed_batch(self, texts: Sequence[str]) -> list[list[float]]:
        self.batch_calls += 1
        return [list(mock_embed(t, self.dimension).values) for t in texts]


@dataclass
class OpenAIEmbeddingBackend:
    """OpenAI-compatible embeddings client: POST {model, input: [texts]}."""

    base_url: str
    model_id: str
    api_key: str = ""
    dimension: int = 1536
    timeout: float = 60.0
    max_attempts: int = 3
    sleep: Callable[[float], None] = field(default=time.sleep, repr=False)
    batch_calls: int = field(default=0, init=False)

    def embed_batch(self, texts: Sequence[str]) -> list[list[float]]:
        self.batch_calls += 1
        url = self.base_url.rstrip("/") + "/embeddings"
        payload = {"model": self.model_id, "input": list(texts)}

        def call() -> dict:
            return _post_json(url, payload, self.api_key, self.timeout)

        data = with_retry(call, max_attempts=self.max_attempts, sleep=self.sleep)
        try:
            rows = sorted(data["data"], key=lambda row: row["index"])
            vectors = [list(map(float, row["embedding"])) for row in rows]
        except (KeyError, TypeError) as exc:
            raise BackendError(f"malformed embeddings reply: {exc}") from exc
        if len(vectors) != len(texts):
            raise BackendError(
                f"asked for {len(texts)} embeddings, got {len(vectors)}"
            )
        return vectors


def embed_texts(
    texts: Sequence[str],
    backend: EmbeddingBackend,
    cache: EmbeddingCache | None = None,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> list[EmbeddingVector]:
    """Embed texts in order: cache first, then the backend in batches.

    The backend sees each distinct uncached text exactly once, in batches
    of at most batch_size; every returned vector is unit-norm.
    """
    if not texts:
        raise ValueError("embed_texts requires at least one text")
    if any(not t.strip() for t in texts):
        raise ValueError("embed_texts requires non-blank texts")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")

    resolved: dict[str, EmbeddingVector] = {}
    misses: list[str] = []
    seen: set[str] = set()
    for text in texts:
        if text in seen:
            continue
        seen.add(text)
        cached = cache.get(backend.model_id, text) if cache is not None else None
        if cached is not None:
            resolved[text] = cached
        else:
            misses.append(text)

    for start in range(0, len(misses), batch_size):
        batch = misses[start : start + batch_size]
        raw_vectors = backend.embed_batch(batch)
        if len(raw_vectors) != len(batch):
            raise BackendError(
                f"backend returned {len(raw_vectors)} vectors for {len(batch)} texts"
            )
        for text, values in zip(batch, raw_vectors):
            if len(values) != backend.dimension:
                raise DimensionMismatch(
                    f"backend returned {len(values)}-d vector, expected "
                    f"{backend.dimension}-d"
                )
            vector = normalize_vector(
                EmbeddingVector(tuple(float(v) for v in values), backend.model_id)
            )
            resolved[text] = vector
            if cache is not None:
                cache.put(backend.model_id, text, vector)

    return [resolved[text] for text in texts]
