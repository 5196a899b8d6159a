import hashlib
import math

import pytest
from hypothesis import given, strategies as st

from paperchat.embed import (
    EmbeddingCache,
    EmbeddingVector,
    MockEmbeddingBackend,
    OpenAIEmbeddingBackend,
    content_hash,
    embed_texts,
    mock_embed,
    normalize_vector,
)
from paperchat.errors import BackendError, DimensionMismatch, ZeroVector


def test_embedding_vector_basics():
    v = EmbeddingVector((3.0, 4.0), model_id="m")
    assert v.dimension == 2
    assert v.norm() == pytest.approx(5.0)
    assert v.dot(EmbeddingVector((1.0, 0.0))) == pytest.approx(3.0)


def test_embedding_vector_rejects_non_finite():
    with pytest.raises(ValueError):
        EmbeddingVector((1.0, float("nan")))
    with pytest.raises(ValueError):
        EmbeddingVector((float("inf"), 0.0))
    with pytest.raises(ValueError):
        EmbeddingVector(())


def test_normalize_vector():
    unit = normalize_vector(EmbeddingVector((3.0, 4.0)))
    assert unit.norm() == pytest.approx(1.0, abs=1e-12)
    assert unit.values == (0.6, 0.8)
    with pytest.raises(ZeroVector):
        normalize_vector(EmbeddingVector((0.0, 0.0)))


def test_mock_embed_is_deterministic_unit_norm():
    a = mock_embed("galactic disk kinematics")
    b = mock_embed("galactic disk kinematics")
    assert a.values == b.values
    assert a.dimension == 64
    assert a.model_id == "mock-3gram-64"
    assert a.norm() == pytest.approx(1.0, abs=1e-12)


def test_mock_embed_case_insensitive():
    assert mock_embed("Stars").values == mock_embed("stars").values


def test_mock_embed_short_text_uses_basis_vector():
    for text in ("", "a", "ab"):
        v = mock_embed(text)
        assert v.values[0] == 1.0
        assert all(x == 0.0 for x in v.values[1:])


def test_mock_embed_matches_independent_oracle():
    # oracle rebuilt from the algorithm statement, not the implementation
    text, d = "abcd", 64
    counts = [0.0] * d
    for i in range(len(text) - 2):
        gram = text[i : i + 3].encode("utf-8")
        h = int.from_bytes(hashlib.blake2b(gram, digest_size=8).digest(), "little")
        sign = 1.0 if (h >> 62) & 1 == 0 else -1.0
        counts[h % d] += sign
    norm = math.sqrt(sum(x * x for x in counts))
    expected = tuple(x / norm for x in counts)
    assert mock_embed(text).values == expected


def test_mock_embed_frozen_similarity_regression():
    # values computed once from the oracle above and frozen
    a = mock_embed("the galactic disk rotates")
    b = mock_embed("the galactic disc rotates")
    c = mock_embed("quantum error correction codes")
    assert a.dot(b) == pytest.approx(0.823529411764706, abs=1e-12)
    assert a.dot(c) == pytest.approx(0.0, abs=1e-12)
    assert a.dot(b) > a.dot(c)  # near-identical text scores higher


def test_mock_embed_respects_dimension():
    v = mock_embed("some words here", d=16)
    assert v.dimension == 16
    assert v.model_id == "mock-3gram-16"


def test_content_hash_is_sha256():
    assert content_hash("abc") == hashlib.sha256(b"abc").hexdigest()


def test_embed_texts_validates_inputs():
    backend = MockEmbeddingBackend()
    with pytest.raises(ValueError):
        embed_texts([], backend)
    with pytest.raises(ValueError):
        embed_texts(["ok", "  "], backend)
    with pytest.raises(ValueError):
        embed_texts(["ok"], backend, batch_size=0)


def test_embed_texts_order_and_values():
    backend = MockEmbeddingBackend()
    texts = ["alpha beta", "gamma delta", "alpha beta"]
    vectors = embed_texts(texts, backend)
    assert len(vectors) == 3
    assert vectors[0].values == vectors[2].values
    # pipeline = backend row, then unconditional normalization
    assert vectors[0].values == normalize_vector(mock_embed("alpha beta")).values
    assert vectors[1].values == normalize_vector(mock_embed("gamma delta")).values


def test_embed_texts_dedupes_within_request():
    backend = MockEmbeddingBackend()
    embed_texts(["same text"] * 50, backend)
    assert backend.batch_calls == 1  # one unique text, one batch


def test_embed_texts_batches_by_sixteen():
    backend = MockEmbeddingBackend()
    texts = [f"text number {i}" for i in range(100)]
    embed_texts(texts, backend)
    assert backend.batch_calls == math.ceil(100 / 16)  # 7


def test_embed_texts_cache_prevents_repeat_calls():
    backend = MockEmbeddingBackend()
    cache = EmbeddingCache()
    texts = [f"text {i}" for i in range(5)]
    embed_texts(texts, backend, cache)
    first = backend.batch_calls
    again = embed_texts(texts, backend, cache)
    assert backend.batch_calls == first  # all hits, zero new batches
    assert [v.values for v in again] == [
        normalize_vector(mock_embed(t)).values for t in texts
    ]
    assert len(cache) == 5


def test_embed_texts_cache_is_model_scoped():
    cache = EmbeddingCache()
    embed_texts(["shared"], MockEmbeddingBackend(dimension=64), cache)
    small = MockEmbeddingBackend(dimension=16)
    out = embed_texts(["shared"], small, cache)
    assert small.batch_calls == 1  # different model_id, no cross-model hit
    assert out[0].dimension == 16


class WrongSizeBackend:
    model_id = "wrong"
    dimension = 8

    def embed_batch(self, texts):
        return [[1.0, 0.0] for _ in texts]  # lies about its dimension


def test_embed_texts_checks_backend_dimension():
    with pytest.raises(DimensionMismatch):
        embed_texts(["x y z"], WrongSizeBackend())


class UnnormalizedBackend:
    model_id = "raw-scale"
    dimension = 2

    def embed_batch(self, texts):
        return [[3.0, 4.0] for _ in texts]


def test_embed_texts_normalizes_backend_output():
    out = embed_texts(["anything"], UnnormalizedBackend())
    assert out[0].values == (0.6, 0.8)
    assert out[0].norm() == pytest.approx(1.0, abs=1e-12)


@given(st.text(min_size=3, max_size=80))
def test_mock_embed_always_unit_norm(text):
    assert mock_embed(text).norm() == pytest.approx(1.0, abs=1e-9)


def test_openai_embedding_backend_sorts_rows_by_index(monkeypatch):
    from paperchat import llm as llm_module

    class FakeResponse:
        status_code = 200
        text = ""

        def json(self):
            return {
                "data": [
                    {"index": 1, "embedding": [0.0, 1.0]},
                    {"index": 0, "embedding": [1.0, 0.0]},
                ]
            }

    monkeypatch.setattr(llm_module.requests, "post", lambda *a, **k: FakeResponse())
    backend = OpenAIEmbeddingBackend(
        base_url="https://x.test", model_id="emb", dimension=2
    )
    rows = backend.embed_batch(["first", "second"])
    assert rows == [[1.0, 0.0], [0.0, 1.0]]


def test_openai_embedding_backend_row_count_mismatch(monkeypatch):
    from paperchat import llm as llm_module

    class FakeResponse:
        status_code = 200
        text = ""

        def json(self):
            return {"data": [{"index": 0, "embedding": [1.0, 0.0]}]}

    monkeypatch.setattr(llm_module.requests, "post", lambda *a, **k: FakeResponse())
    backend = OpenAIEmbeddingBackend(
        base_url="https://x.test", model_id="emb", dimension=2
    )
    with pytest.raises(BackendError):
        backend.embed_batch(["first", "second"])
