"""Conversational chain: standalone-question condensation, budgeted
retrieval, prompt assembly, answer generation, citation grounding.

A turn either completes and is appended to its session, or fails
atomically with the failing stage recorded; transcripts serialize to
JSON Lines with a stable field order.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .corpus import (
    Corpus,
    Document,
    estimate_tokens,
    find_citation_keys,
    normalize_citation_key,
)
from .embed import EmbeddingVector
from .errors import ContextOverflow, PaperChatError, StageFailure, TurnInProgress
from .llm import (
    ChatBackend,
    ChatMessage,
    SYSTEM,
    TokenBudget,
    USER,
    complete_chat,
    request_token_estimate,
)
from .vindex import Chunk, SearchHit, VectorIndex, search_topk

ANSWER_SYSTEM_PROMPT = (
    "Engage in insightful conversations with humans, providing meaningful, "
    "concise answers based on the provided documents. Include pertinent "
    "study citations, such as Example et al. (2020)."
)

CONDENSE_SYSTEM_PROMPT = (
    "Given the conversation so far and a follow-up question, rephrase the "
    "follow-up as a standalone question."
)

DEFAULT_K_RETRIEVE = 4


@dataclass(frozen=True)
class CitationReport:
    detected: tuple[str, ...]
    grounded: tuple[str, ...]
    ungrounded: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "detected": list(self.detected),
            "grounded": list(self.grounded),
            "ungrounded": list(self.ungrounded),
        }


@dataclass(frozen=True)
class RetrievedContext:
    hits: tuple[tuple[SearchHit, Chunk], ...]
    total_token_estimate: int

    def to_dict(self, citation_key_by_doc: dict[str, str] | None = None) -> dict:
        keys = citation_key_by_doc or {}
        return {
            "hits": [
                {
                    "chunk_id": chunk.chunk_id,
                    "doc_id": chunk.doc_id,
                    "citation_key": keys.get(chunk.doc_id, ""),
                    "score": hit.score,
                    "text": chunk.text,
                }
                for hit, chunk in self.hits
            ],
            "total_token_estimate": self.total_token_estimate,
        }


@dataclass(frozen=True)
class ChatTurn:
    user_query: str
    standalone_question: str
    retrieved: RetrievedContext
    answer: str
    citation_report: CitationReport


@dataclass
class ChatConfig:
    k_retrieve: int = DEFAULT_K_RETRIEVE
    budget: TokenBudget = field(default_factory=TokenBudget)


@dataclass
class ChatSession:
    """Append-only conversation state; one turn in flight at a time."""

    session_id: str
    corpus_id: str = ""
    config: ChatConfig = field(default_factory=ChatConfig)
    turns: list[ChatTurn] = field(default_factory=list)
    _turn_lock: threading.Lock = field(
        default_factory=threading.Lock, repr=False, compare=False
    )

    @classmethod
    def new(cls, corpus_id: str = "", config: ChatConfig | None = None) -> "ChatSession":
        return cls(
            session_id=uuid.uuid4().hex,
            corpus_id=corpus_id,
            config=config or ChatConfig(),
        )


def serialize_history(history: Sequence[ChatTurn]) -> list[str]:
    """Alternating Human/Assistant lines, oldest first."""
    lines: list[str] = []
    for turn in history:
        lines.append(f"Human: {turn.user_query}")
        lines.append(f"Assistant: {turn.answer}")
    return lines


def _condense_user_content(lines: Sequence[str], query: str) -> str:
    conversation = "\n".join(lines)
    return f"Conversation:\n{conversation}\n\nFollow-up: {query}"


def condense_question(
    history: Sequence[ChatTurn],
    query: str,
    backend: ChatBackend,
    budget: TokenBudget | None = None,
) -> str:
    """Fold (history + query) into a standalone question.

    With no history the query already stands alone and no backend call is
    made. History is truncated from the oldest turn until the prompt fits
    the budget.
    """
    if not query:
        raise ValueError("query must be non-empty")
    if not history:
        return query
    budget = budget or TokenBudget()

    lines = serialize_history(history)
    allowance = budget.prompt_allowance - estimate_tokens(CONDENSE_SYSTEM_PROMPT)
    while lines and estimate_tokens(_condense_user_content(lines, query)) > allowance:
        lines = lines[2:]  # drop the oldest turn's Human+Assistant pair

    messages = [
        ChatMessage(SYSTEM, CONDENSE_SYSTEM_PROMPT),
        ChatMessage(USER, _condense_user_content(lines, query)),
    ]
    return complete_chat(messages, backend, budget)


def format_context_block(citation_key: str, text: str) -> str:
    return f"[{citation_key}]\n{text}"


def build_user_content(blocks: Sequence[str], question: str) -> str:
    context_section = "\n\n".join(blocks)
    return f"{context_section}\n\nQuestion: {question}"


def _context_blocks(
    hits: Sequence[tuple[SearchHit, Chunk]], citation_key_by_doc: dict[str, str]
) -> list[str]:
    return [
        format_context_block(citation_key_by_doc[chunk.doc_id], chunk.text)
        for _, chunk in hits
    ]


def retrieve_context(
    question: str,
    index: VectorIndex,
    chunks_by_id: dict[str, Chunk],
    citation_key_by_doc: dict[str, str],
    embedder: Callable[[str], EmbeddingVector],
    k: int = DEFAULT_K_RETRIEVE,
    budget_remaining: int = TokenBudget().prompt_allowance,
) -> RetrievedContext:
    """Top-k hits, then drop lowest-ranked until the assembled user message
    (context blocks + question tail) fits budget_remaining.

    ContextOverflow means even the single best hit does not fit.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    query_vector = embedder(question)
    hits = search_topk(index, query_vector, k)
    paired = [(hit, chunks_by_id[hit.chunk_id]) for hit in hits]

    while paired:
        blocks = _context_blocks(paired, citation_key_by_doc)
        if estimate_tokens(build_user_content(blocks, question)) <= budget_remaining:
            break
        paired.pop()
    if not paired:
        raise ContextOverflow(
            "best retrieved chunk alone exceeds the remaining token budget"
        )

    context_section = "\n\n".join(_context_blocks(paired, citation_key_by_doc))
    return RetrievedContext(
        hits=tuple(paired),
        total_token_estimate=estimate_tokens(context_section),
    )


def assemble_prompt(
    context: RetrievedContext,
    question: str,
    citation_key_by_doc: dict[str, str],
    budget: TokenBudget | None = None,
) -> list[ChatMessage]:
    """System prompt plus one user message of labeled context blocks and
    the standalone question."""
    if not context.hits:
        raise ValueError("cannot assemble a prompt from an empty context")
    budget = budget or TokenBudget()
    blocks = _context_blocks(context.hits, citation_key_by_doc)
    messages = [
        ChatMessage(SYSTEM, ANSWER_SYSTEM_PROMPT),
        ChatMessage(USER, build_user_content(blocks, question)),
    ]
    if request_token_estimate(messages) > budget.prompt_allowance:
        # retrieve_context guarantees the fit; reaching this is a bug.
        raise PaperChatError(
            "assembled prompt exceeds budget despite budgeted retrieval"
        )
    return messages


def ground_citations(
    answer: str, corpus: Corpus | Iterable[Document]
) -> CitationReport:
    """Partition citation-key-shaped substrings of the answer into those
    matching a corpus document (case-insensitive, exact year) and the rest."""
    known = {normalize_citation_key(doc.citation_key) for doc in corpus}
    detected: list[str] = []
    seen: set[str] = set()
    for key in find_citation_keys(answer):
        normalized = normalize_citation_key(key)
        if normalized in seen:
            continue
        seen.add(normalized)
        detected.append(key)
    grounded = tuple(
        key for key in detected if normalize_citation_key(key) in known
    )
    ungrounded = tuple(
        key for key in detected if normalize_citation_key(key) not in known
    )
    return CitationReport(
        detected=tuple(detected), grounded=grounded, ungrounded=ungrounded
    )


@dataclass
class ChatRuntime:
    """Everything a turn needs: backends, index, chunk and key lookups."""

    chat_backend: ChatBackend
    embedder: Callable[[str], EmbeddingVector]
    index: VectorIndex
    chunks_by_id: dict[str, Chunk]
    corpus: Corpus

    def citation_key_by_doc(self) -> dict[str, str]:
        return {doc.doc_id: doc.citation_key for doc in self.corpus}


def _stage(name: str, fn: Callable, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PaperChatError as exc:
        raise StageFailure(name, exc) from exc


def run_turn(session: ChatSession, query: str, runtime: ChatRuntime) -> ChatTurn:
    """Execute one full turn; on any stage failure nothing is appended."""
    if not query:
        raise ValueError("query must be non-empty")
    if not session._turn_lock.acquire(blocking=False):
        raise TurnInProgress(
            f"session {session.session_id} already has a turn in flight"
        )
    try:
        budget = session.config.budget
        keys_by_doc = runtime.citation_key_by_doc()

        standalone = _stage(
            "condense",
            condense_question,
            session.turns,
            query,
            runtime.chat_backend,
            budget,
        )
        context_allowance = budget.prompt_allowance - estimate_tokens(
            ANSWER_SYSTEM_PROMPT
        )
        retrieved = _stage(
            "retrieve",
            retrieve_context,
            standalone,
            runtime.index,
            runtime.chunks_by_id,
            keys_by_doc,
            runtime.embedder,
            session.config.k_retrieve,
            context_allowance,
        )
        messages = _stage(
            "assemble", assemble_prompt, retrieved, standalone, keys_by_doc, budget
        )
        answer = _stage(
            "generate", complete_chat, messages, runtime.chat_backend, budget
        )
        report = _stage("ground", ground_citations, answer, runtime.corpus)

        turn = ChatTurn(
            user_query=query,
            standalone_question=standalone,
            retrieved=retrieved,
            answer=answer,
            citation_report=report,
        )
        session.turns.append(turn)
        return turn
    finally:
        session._turn_lock.release()


def turn_to_dict(turn: ChatTurn, citation_key_by_doc: dict[str, str] | None = None) -> dict:
    return {
        "user_query": turn.user_query,
        "standalone_question": turn.standalone_question,
        "retrieved": turn.retrieved.to_dict(citation_key_by_doc),
        "answer": turn.answer,
        "citation_report": turn.citation_report.to_dict(),
    }


def turn_to_json(turn: ChatTurn, citation_key_by_doc: dict[str, str] | None = None) -> str:
    return json.dumps(
        turn_to_dict(turn, citation_key_by_doc), separators=(",", ":"), sort_keys=False
    )


def transcript_to_jsonl(
    turns: Sequence[ChatTurn], citation_key_by_doc: dict[str, str] | None = None
) -> str:
    """One ChatTurn per line; the determinism surface for acceptance."""
    return "".join(turn_to_json(t, citation_key_by_doc) + "\n" for t in turns)
