"""Document model: plain-text ingestion, paragraph segmentation, counting.

A paper enters the engine as plain text; paragraphs are blank-line-separated
blocks and remain the structural unit everything downstream (distillation
checks, chunking, retrieval) is measured against.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DuplicateDocument, EmptyInput, MalformedCitationKey, NotFound

RAW = "raw"
DISTILLED = "distilled"
SOURCE_KINDS = (RAW, DISTILLED)

# Surname, optionally "& Surname" or "et al.", then a parenthesised year.
# Surnames may carry internal hyphens/apostrophes and unicode letters; the
# initial must be an uppercase letter ([^\W\d_a-z] only excludes ASCII
# lowercase, so matches are post-filtered with str.isupper()).
_SURNAME = r"[^\W\d_a-z][^\W\d_]*(?:[-'’][^\W\d_]+)*"
_CITATION_KEY = rf"{_SURNAME}(?:\s+&\s+{_SURNAME}|\s+et\s+al\.)?\s+\((?:19|20)\d{{2}}\)"

CITATION_KEY_RE = re.compile(_CITATION_KEY)
_CITATION_KEY_FULL_RE = re.compile(rf"^{_CITATION_KEY}$")


def _surnames_capitalized(key: str) -> bool:
    head = key[:1]
    if not head.isupper():
        return False
    amp = key.find("&")
    if amp != -1:
        second = key[amp + 1 :].lstrip()[:1]
        return second.isupper()
    return True

_PARAGRAPH_SPLIT_RE = re.compile(r"\n\s*\n")


def word_count(text: str) -> int:
    """Number of maximal whitespace-delimited runs in text."""
    return len(text.split())


def estimate_tokens(text: str) -> int:
    """Deterministic coarse token estimate: ceil(len(text) / 4)."""
    return math.ceil(len(text) / 4)


def normalize_citation_key(key: str) -> str:
    """Collapse whitespace and casefold for comparisons; year stays exact."""
    return " ".join(key.split()).casefold()


def is_valid_citation_key(key: str) -> bool:
    key = key.strip()
    if _CITATION_KEY_FULL_RE.match(key) is None:
        return False
    return _surnames_capitalized(key)


def find_citation_keys(text: str) -> list[str]:
    """All citation-key-shaped substrings, whitespace-canonicalized, in order."""
    return [
        " ".join(m.group(0).split())
        for m in CITATION_KEY_RE.finditer(text)
        if _surnames_capitalized(m.group(0))
    ]


@dataclass(frozen=True)
class Paragraph:
    """One paragraph with its word and token accounting."""

    index: int
    text: str
    word_count: int
    token_estimate: int

    @classmethod
    def from_text(cls, index: int, text: str) -> "Paragraph":
        stripped = text.strip()
        if not stripped:
            raise EmptyInput(f"paragraph {index} is empty after trimming")
        return cls(
            index=index,
            text=stripped,
            word_count=word_count(stripped),
            token_estimate=estimate_tokens(stripped),
        )


@dataclass(frozen=True)
class Document:
    """An ordered-paragraph paper, raw or distilled."""

    doc_id: str
    citation_key: str
    title: str
    paragraphs: tuple[Paragraph, ...]
    source_kind: str

    def __post_init__(self):
        if not self.paragraphs:
            raise EmptyInput("document has no paragraphs")
        if self.source_kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source_kind {self.source_kind!r}")

    @property
    def total_words(self) -> int:
        return sum(p.word_count for p in self.paragraphs)

    @property
    def total_token_estimate(self) -> int:
        return sum(p.token_estimate for p in self.paragraphs)

    def body(self) -> str:
        """Reconstructed text: paragraphs joined by one blank line."""
        return "\n\n".join(p.text for p in self.paragraphs)


def split_paragraphs(raw: str) -> list[str]:
    """Blank-line-separated blocks of raw, trimmed, empties dropped."""
    return [block.strip() for block in _PARAGRAPH_SPLIT_RE.split(raw) if block.strip()]


def _derive_doc_id(citation_key: str, title: str, body: str, source_kind: str) -> str:
    # Content-addressed so repeated pipeline runs mint identical ids.
    digest = hashlib.sha256(
        "\x1f".join((citation_key, title, body, source_kind)).encode("utf-8")
    ).hexdigest()
    return digest[:16]


def make_document(
    paragraph_texts: list[str],
    citation_key: str,
    title: str,
    source_kind: str,
    doc_id: str | None = None,
) -> Document:
    """Build a Document from already-split paragraph texts."""
    paragraphs = tuple(
        Paragraph.from_text(i, text) for i, text in enumerate(paragraph_texts)
    )
    if not paragraphs:
        raise EmptyInput("no paragraphs to build a document from")
    body = "\n\n".join(p.text for p in paragraphs)
    if doc_id is None:
        doc_id = _derive_doc_id(citation_key, title, body, source_kind)
    return Document(
        doc_id=doc_id,
        citation_key=citation_key,
        title=title,
        paragraphs=paragraphs,
        source_kind=source_kind,
    )


def ingest_text(raw: str, citation_key: str, title: str) -> Document:
    """Segment raw plain text into a raw-kind Document.

    Paragraph boundaries are one or more blank lines; each paragraph is
    trimmed and counted.
    """
    if not raw.strip():
        raise EmptyInput("raw text has no non-whitespace content")
    if not is_valid_citation_key(citation_key):
        raise MalformedCitationKey(
            f"citation key {citation_key!r} does not match 'Surname et al. (YYYY)'"
        )
    return make_document(split_paragraphs(raw), citation_key.strip(), title, RAW)


@dataclass
class Corpus:
    """In-memory set of documents with uniqueness guarantees.

    doc_id is unique across the corpus; citation_key is unique per
    source_kind (a paper and its distilled derivative share the key).
    """

    documents: dict[str, Document] = field(default_factory=dict)

    def add(self, doc: Document) -> Document:
        if doc.doc_id in self.documents:
            raise DuplicateDocument(f"doc_id {doc.doc_id!r} already in corpus")
        key = normalize_citation_key(doc.citation_key)
        for other in self.documents.values():
            if (
                other.source_kind == doc.source_kind
                and normalize_citation_key(other.citation_key) == key
            ):
                raise DuplicateDocument(
                    f"citation key {doc.citation_key!r} already in corpus "
                    f"for source_kind {doc.source_kind!r}"
                )
        self.documents[doc.doc_id] = doc
        return doc

    def get(self, doc_id: str) -> Document:
        try:
            return self.documents[doc_id]
        except KeyError:
            raise NotFound(f"no document with doc_id {doc_id!r}") from None

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents.values())

    def remove(self, doc_id: str) -> None:
        if doc_id not in self.documents:
            raise NotFound(f"no document with doc_id {doc_id!r}")
        del self.documents[doc_id]

    def by_kind(self, source_kind: str) -> list[Document]:
        return [d for d in self.documents.values() if d.source_kind == source_kind]

    def citation_keys(self) -> set[str]:
        return {d.citation_key for d in self.documents.values()}

    def distilled_for(self, doc_id: str) -> Document | None:
        """The distilled derivative of a raw document, if one exists."""
        raw_doc = self.get(doc_id)
        key = normalize_citation_key(raw_doc.citation_key)
        for doc in self.documents.values():
            if (
                doc.source_kind == DISTILLED
                and normalize_citation_key(doc.citation_key) == key
            ):
                return doc
        return None

    # --- on-disk layout: <doc_id>.txt + <doc_id>.json sidecar per document

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for doc in self.documents.values():
            (directory / f"{doc.doc_id}.txt").write_text(doc.body(), encoding="utf-8")
            sidecar = {
                "doc_id": doc.doc_id,
                "citation_key": doc.citation_key,
                "title": doc.title,
                "source_kind": doc.source_kind,
            }
            (directory / f"{doc.doc_id}.json").write_text(
                json.dumps(sidecar, indent=2) + "\n", encoding="utf-8"
            )

    @classmethod
    def load(cls, directory: str | Path) -> "Corpus":
        directory = Path(directory)
        corpus = cls()
        if not directory.is_dir():
            return corpus
        for sidecar_path in sorted(directory.glob("*.json")):
            sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
            text_path = directory / f"{sidecar['doc_id']}.txt"
            raw = text_path.read_text(encoding="utf-8")
            doc = make_document(
                split_paragraphs(raw),
                sidecar["citation_key"],
                sidecar["title"],
                sidecar["source_kind"],
                doc_id=sidecar["doc_id"],
            )
            corpus.add(doc)
        return corpus
