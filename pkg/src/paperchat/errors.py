"""Exception hierarchy shared across the engine.

Every error the pipeline can surface derives from PaperChatError so the
service layer can map failures onto its closed ApiError code set.
"""

from __future__ import annotations


class PaperChatError(Exception):
    """Base class for all engine errors."""


class BadConfig(PaperChatError):
    """Configuration is unusable (missing credentials, unknown keys)."""


# --- corpus ---------------------------------------------------------------

class EmptyInput(PaperChatError):
    """Raw text had no non-whitespace content."""


class MalformedCitationKey(PaperChatError):
    """Citation key does not match the 'Surname et al. (YYYY)' grammar."""


class DuplicateDocument(PaperChatError):
    """doc_id or citation_key already present in the corpus."""


class NotFound(PaperChatError):
    """Referenced document, session, or chunk does not exist."""


# --- distill --------------------------------------------------------------

class EmptyReply(PaperChatError):
    """Backend returned a reply with no non-whitespace content."""


class DegenerateOriginal(PaperChatError):
    """Original document has zero words; ratios are undefined."""


# --- embed ----------------------------------------------------------------

class ZeroVector(PaperChatError):
    """Vector has no nonzero component and cannot be normalized."""


class DimensionMismatch(PaperChatError):
    """Vector length disagrees with the expected dimension."""


# --- vindex ---------------------------------------------------------------

class DuplicateChunkId(PaperChatError):
    """chunk_id already present in the index."""


class EmptyIndex(PaperChatError):
    """Search requested against an index with no entries."""


class CorruptIndex(PaperChatError):
    """Index bytes failed magic, length, or checksum validation."""


# --- llm ------------------------------------------------------------------

class BackendError(PaperChatError):
    """Transport or model failure from a chat/embedding backend.

    status_code is the HTTP status when one was received, None for pure
    transport failures (timeouts, refused connections).
    """

    def __init__(self, message: str, status_code: int | None = None):
        super().__init__(message)
        self.status_code = status_code

    @property
    def retryable(self) -> bool:
        if self.status_code is None:
            return True
        return self.status_code == 429 or 500 <= self.status_code < 600


class ScriptExhausted(BackendError):
    """Scripted mock backend ran out of replies."""

    def __init__(self, message: str = "scripted backend has no replies left"):
        super().__init__(message, status_code=None)

    @property
    def retryable(self) -> bool:
        return False


class BudgetExceeded(PaperChatError):
    """Estimated request tokens exceed the window minus reply headroom."""


# --- chat -----------------------------------------------------------------

class ContextOverflow(PaperChatError):
    """Even the best single retrieved chunk exceeds the context budget."""


class TurnInProgress(PaperChatError):
    """A second turn was started on a session while one is in flight."""


class StageFailure(PaperChatError):
    """A chat turn failed; wraps the cause tagged with the failing stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause
