"""LLM-driven document compression to a target word ratio.

Compression must preserve the paragraph count; the report certifies that
plus the word-ratio band, and records citation-key counts before/after
without enforcing them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .corpus import (
    DISTILLED,
    Document,
    RAW,
    find_citation_keys,
    make_document,
    split_paragraphs,
)
from .errors import DegenerateOriginal, EmptyReply
from .llm import ChatBackend, ChatMessage, SYSTEM, TokenBudget, USER, complete_chat

# The instruction sent for the default 50% target; other ratios substitute
# the percentage phrase.
DISTILL_INSTRUCTION_TEMPLATE = (
    "Distill each paragraph of the given text, maintaining the same number "
    "of paragraphs and structure. Limit the word count to {percent}% of the "
    "original, and ensure references are included."
)

DISTILL_SYSTEM_PROMPT = "You rewrite documents exactly as instructed."


@dataclass(frozen=True)
class DistillationPolicy:
    target_ratio: float = 0.5
    ratio_tolerance: float = 0.15
    max_retries: int = 2
    # How many paragraphs go to the backend per request; None sends the
    # whole document in one call.
    batch_paragraphs: int | None = None

    def __post_init__(self):
        if not 0.0 < self.target_ratio <= 1.0:
            raise ValueError(f"target_ratio must be in (0, 1], got {self.target_ratio}")
        if not 0.0 <= self.ratio_tolerance < self.target_ratio:
            raise ValueError(
                f"need 0 <= ratio_tolerance < target_ratio, got "
                f"{self.ratio_tolerance} vs {self.target_ratio}"
            )
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.batch_paragraphs is not None and self.batch_paragraphs < 1:
            raise ValueError("batch_paragraphs must be >= 1 when set")


@dataclass(frozen=True)
class DistillationReport:
    original_doc_id: str
    distilled_doc_id: str
    per_paragraph_ratios: tuple[float, ...]
    overall_ratio: float
    structure_preserved: bool
    accepted: bool
    citations_before: int
    citations_after: int

    def to_dict(self) -> dict:
        return {
            "original_doc_id": self.original_doc_id,
            "distilled_doc_id": self.distilled_doc_id,
            "per_paragraph_ratios": list(self.per_paragraph_ratios),
            "overall_ratio": self.overall_ratio,
            "structure_preserved": self.structure_preserved,
            "accepted": self.accepted,
            "citations_before": self.citations_before,
            "citations_after": self.citations_after,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _percent_phrase(target_ratio: float) -> str:
    return f"{target_ratio * 100:g}"


def build_distill_prompt(doc: Document, policy: DistillationPolicy) -> str:
    """Instruction followed by the document, paragraphs blank-line-separated."""
    if doc.source_kind != RAW:
        raise ValueError("only raw documents are distilled")
    instruction = DISTILL_INSTRUCTION_TEMPLATE.format(
        percent=_percent_phrase(policy.target_ratio)
    )
    return instruction + "\n\n" + doc.body()


def validate_distillation(
    original: Document, candidate: Document, policy: DistillationPolicy
) -> DistillationReport:
    """Certify structure preservation and the word-ratio band.

    Per-paragraph ratios are only meaningful when counts match; acceptance
    needs both structure and |overall - target| <= tolerance.
    """
    original_words = original.total_words
    if original_words == 0:
        raise DegenerateOriginal(f"document {original.doc_id} has zero words")
    structure_preserved = len(candidate.paragraphs) == len(original.paragraphs)
    overall_ratio = candidate.total_words / original_words
    if structure_preserved:
        per_paragraph = tuple(
            c.word_count / o.word_count if o.word_count else 0.0
            for o, c in zip(original.paragraphs, candidate.paragraphs)
        )
    else:
        per_paragraph = ()
    accepted = (
        structure_preserved
        and abs(overall_ratio - policy.target_ratio) <= policy.ratio_tolerance
    )
    return DistillationReport(
        original_doc_id=original.doc_id,
        distilled_doc_id=candidate.doc_id,
        per_paragraph_ratios=per_paragraph,
        overall_ratio=overall_ratio,
        structure_preserved=structure_preserved,
        accepted=accepted,
        citations_before=len(find_citation_keys(original.body())),
        citations_after=len(find_citation_keys(candidate.body())),
    )


def _slice_document(doc: Document, start: int, end: int) -> Document:
    return make_document(
        [p.text for p in doc.paragraphs[start:end]],
        doc.citation_key,
        doc.title,
        RAW,
        doc_id=f"{doc.doc_id}:batch{start}",
    )


def _request_once(
    doc_slice: Document,
    policy: DistillationPolicy,
    backend: ChatBackend,
    budget: TokenBudget,
) -> list[str]:
    prompt = build_distill_prompt(doc_slice, policy)
    reply = complete_chat(
        [
            ChatMessage(SYSTEM, DISTILL_SYSTEM_PROMPT),
            ChatMessage(USER, prompt),
        ],
        backend,
        budget,
    )
    if not reply.strip():
        raise EmptyReply("distillation backend returned an empty reply")
    return split_paragraphs(reply)


def distill_document(
    doc: Document,
    policy: DistillationPolicy,
    backend: ChatBackend,
    budget: TokenBudget | None = None,
) -> tuple[Document, DistillationReport]:
    """Compress doc via the backend and validate the result.

    Each batch of paragraphs is retried up to max_retries times on a
    failed validation; the best attempt (structure first, then ratio
    closeness) is returned with accepted=False when no attempt passes.
    """
    if doc.source_kind != RAW:
        raise ValueError("only raw documents are distilled")
    budget = budget or TokenBudget()

    if policy.batch_paragraphs is None:
        batches = [(0, len(doc.paragraphs))]
    else:
        step = policy.batch_paragraphs
        batches = [
            (start, min(start + step, len(doc.paragraphs)))
            for start in range(0, len(doc.paragraphs), step)
        ]

    best: tuple[Document, DistillationReport] | None = None
    for _ in range(1 + policy.max_retries):
        paragraph_texts: list[str] = []
        for start, end in batches:
            doc_slice = _slice_document(doc, start, end)
            paragraph_texts.extend(_request_once(doc_slice, policy, backend, budget))
        candidate = make_document(
            paragraph_texts,
            doc.citation_key,
            doc.title,
            DISTILLED,
        )
        report = validate_distillation(doc, candidate, policy)
        if report.accepted:
            return candidate, report
        if best is None or _attempt_rank(report, policy) < _attempt_rank(
            best[1], policy
        ):
            best = (candidate, report)
    assert best is not None
    return best


def _attempt_rank(report: DistillationReport, policy: DistillationPolicy):
    # Structure-preserving attempts beat broken ones; then ratio closeness.
    return (
        0 if report.structure_preserved else 1,
        abs(report.overall_ratio - policy.target_ratio),
    )
