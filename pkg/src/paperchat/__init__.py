"""Retrieval-augmented conversations over a corpus of distilled papers."""

from .chat import (
    ANSWER_SYSTEM_PROMPT,
    CONDENSE_SYSTEM_PROMPT,
    ChatConfig,
    ChatRuntime,
    ChatSession,
    ChatTurn,
    CitationReport,
    RetrievedContext,
    condense_question,
    ground_citations,
    retrieve_context,
    run_turn,
    transcript_to_jsonl,
    turn_to_dict,
    turn_to_json,
)
from .config import AppConfig
from .corpus import (
    Corpus,
    Document,
    Paragraph,
    estimate_tokens,
    find_citation_keys,
    ingest_text,
    make_document,
    normalize_citation_key,
    split_paragraphs,
    word_count,
)
from .distill import (
    DISTILL_INSTRUCTION_TEMPLATE,
    DistillationPolicy,
    DistillationReport,
    build_distill_prompt,
    distill_document,
    validate_distillation,
)
from .embed import (
    EmbeddingCache,
    EmbeddingVector,
    MockEmbeddingBackend,
    OpenAIEmbeddingBackend,
    embed_texts,
    mock_embed,
    normalize_vector,
)
from .engine import Engine
from .errors import PaperChatError
from .llm import (
    ChatMessage,
    OpenAIChatBackend,
    RuleBasedMockBackend,
    ScriptedChatBackend,
    TokenBudget,
    complete_chat,
    with_retry,
)
from .service import create_app
from .vindex import (
    Chunk,
    SearchHit,
    VectorIndex,
    add_vectors,
    brute_force_topk,
    chunk_document,
    load_index,
    save_index,
    search_topk,
)

__version__ = "0.1.0"
