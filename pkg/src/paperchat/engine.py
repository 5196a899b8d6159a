"""Pipeline orchestration shared by the CLI and the HTTP service.

Owns the corpus, chunk table, vector index, sessions, and backend wiring;
service handlers and CLI subcommands stay thin mappings onto this.
"""

from __future__ import annotations

import threading
from pathlib import Path

from .chat import (
    ChatConfig,
    ChatRuntime,
    ChatSession,
    ChatTurn,
    run_turn,
)
from .config import AppConfig
from .corpus import Corpus, DISTILLED, Document, RAW, ingest_text
from .distill import DistillationPolicy, DistillationReport, distill_document
from .embed import (
    EmbeddingBackend,
    EmbeddingCache,
    EmbeddingVector,
    MockEmbeddingBackend,
    OpenAIEmbeddingBackend,
    embed_texts,
)
from .errors import NotFound
from .llm import ChatBackend, OpenAIChatBackend, RuleBasedMockBackend, TokenBudget
from .vindex import (
    VectorIndex,
    add_vectors,
    chunk_document,
    load_index,
    save_index,
    search_topk,
)

INDEX_FILENAME = "index.pcix"
CORPUS_DIRNAME = "corpus"


def build_chat_backend(config: AppConfig) -> ChatBackend:
    if config.mock_mode:
        return RuleBasedMockBackend()
    return OpenAIChatBackend(
        base_url=config.api_base,
        model=config.chat_model,
        api_key=config.api_key,
        temperature=config.temperature,
    )


def build_embed_backend(config: AppConfig) -> EmbeddingBackend:
    if config.mock_mode:
        return MockEmbeddingBackend(config.mock_dimension)
    return OpenAIEmbeddingBackend(
        base_url=config.api_base,
        model_id=config.embed_model,
        api_key=config.api_key,
        dimension=config.embed_dimension,
    )


class Engine:
    """One corpus, one index, many sessions."""

    def __init__(
        self,
        config: AppConfig | None = None,
        chat_backend: ChatBackend | None = None,
        embed_backend: EmbeddingBackend | None = None,
    ):
        self.config = config or AppConfig()
        self.chat_backend = chat_backend or build_chat_backend(self.config)
        self.embed_backend = embed_backend or build_embed_backend(self.config)
        self.cache = EmbeddingCache()
        self.corpus = Corpus()
        self.chunks_by_id = {}
        self.index = VectorIndex(self.embed_backend.dimension)
        self.sessions: dict[str, ChatSession] = {}
        self._sessions_lock = threading.Lock()
        if self.config.data_dir:
            self._load_state(Path(self.config.data_dir))

    # --- configuration-derived policy objects

    def budget(self) -> TokenBudget:
        return TokenBudget(
            max_total=self.config.max_total_tokens,
            reserved_for_reply=self.config.reserved_for_reply,
        )

    def distillation_policy(self, target_ratio: float | None = None) -> DistillationPolicy:
        return DistillationPolicy(
            target_ratio=(
                self.config.target_ratio if target_ratio is None else target_ratio
            ),
            ratio_tolerance=self.config.ratio_tolerance,
            max_retries=self.config.distill_max_retries,
        )

    # --- corpus operations

    def ingest(self, text: str, citation_key: str, title: str) -> Document:
        doc = self.corpus.add(ingest_text(text, citation_key, title))
        self._save_corpus()
        return doc

    def distill(
        self, doc_id: str, target_ratio: float | None = None
    ) -> tuple[Document, DistillationReport]:
        original = self.corpus.get(doc_id)
        if original.source_kind != RAW:
            raise NotFound(f"document {doc_id!r} is not a raw document")
        distilled, report = distill_document(
            original,
            self.distillation_policy(target_ratio),
            self.chat_backend,
            self.budget(),
        )
        # A re-distill replaces the previous derivative for this paper.
        previous = self.corpus.distilled_for(doc_id)
        if previous is not None:
            self.corpus.remove(previous.doc_id)
        self.corpus.add(distilled)
        self._save_corpus()
        return distilled, report

    def documents(self) -> list[Document]:
        return list(self.corpus)

    # --- index operations

    def rebuild_index(self) -> int:
        """Re-chunk and re-embed the retrievable form of every paper.

        The distilled derivative is indexed when one exists, otherwise the
        raw document stands in.
        """
        docs = []
        for doc in self.corpus.by_kind(RAW):
            docs.append(self.corpus.distilled_for(doc.doc_id) or doc)
        chunks = []
        for doc in docs:
            chunks.extend(chunk_document(doc, self.config.chunk_max_tokens))
        index = VectorIndex(self.embed_backend.dimension)
        if chunks:
            vectors = embed_texts(
                [c.text for c in chunks],
                self.embed_backend,
                self.cache,
                self.config.embed_batch_size,
            )
            add_vectors(index, list(zip((c.chunk_id for c in chunks), vectors)))
        self.index = index
        self.chunks_by_id = {c.chunk_id: c for c in chunks}
        self._save_index()
        return len(chunks)

    # --- chat operations

    def embedder(self):
        def embed_one(text: str) -> EmbeddingVector:
            return embed_texts([text], self.embed_backend, self.cache)[0]

        return embed_one

    def runtime(self) -> ChatRuntime:
        return ChatRuntime(
            chat_backend=self.chat_backend,
            embedder=self.embedder(),
            index=self.index,
            chunks_by_id=self.chunks_by_id,
            corpus=self.corpus,
        )

    def chat_config(self) -> ChatConfig:
        return ChatConfig(k_retrieve=self.config.k_retrieve, budget=self.budget())

    def create_session(self) -> ChatSession:
        session = ChatSession.new(corpus_id=CORPUS_DIRNAME, config=self.chat_config())
        with self._sessions_lock:
            self.sessions[session.session_id] = session
        return session

    def get_session(self, session_id: str) -> ChatSession:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise NotFound(f"no session {session_id!r}") from None

    def post_message(self, session_id: str, query: str) -> ChatTurn:
        session = self.get_session(session_id)
        return run_turn(session, query, self.runtime())

    def citation_key_by_doc(self) -> dict[str, str]:
        return {doc.doc_id: doc.citation_key for doc in self.corpus}

    # --- one-shot retrieval inspection (CLI `ask --show-context`)

    def search(self, question: str, k: int) -> list[tuple[float, str, str]]:
        vector = self.embedder()(question)
        hits = search_topk(self.index, vector, k)
        keys = self.citation_key_by_doc()
        out = []
        for hit in hits:
            chunk = self.chunks_by_id[hit.chunk_id]
            out.append((hit.score, keys.get(chunk.doc_id, ""), chunk.chunk_id))
        return out

    # --- persistence under data_dir (corpus files + index bytes)

    def _save_corpus(self) -> None:
        if self.config.data_dir:
            self.corpus.save(Path(self.config.data_dir) / CORPUS_DIRNAME)

    def _save_index(self) -> None:
        if not self.config.data_dir:
            return
        path = Path(self.config.data_dir) / INDEX_FILENAME
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(save_index(self.index))

    def _load_state(self, data_dir: Path) -> None:
        corpus_dir = data_dir / CORPUS_DIRNAME
        if corpus_dir.is_dir():
            self.corpus = Corpus.load(corpus_dir)
        index_path = data_dir / INDEX_FILENAME
        if index_path.is_file():
            self.index = load_index(index_path.read_bytes())
            # Chunk table is re-derived; chunking is deterministic.
            docs = []
            for doc in self.corpus.by_kind(RAW):
                docs.append(self.corpus.distilled_for(doc.doc_id) or doc)
            chunks = []
            for doc in docs:
                chunks.extend(chunk_document(doc, self.config.chunk_max_tokens))
            self.chunks_by_id = {
                c.chunk_id: c for c in chunks if c.chunk_id in self.index
            }
