"""Chat-completion backends: live HTTP client, deterministic mocks, retry.

All request/reply traffic in the engine flows through complete_chat, which
enforces the token budget before anything touches the network.
"""

from __future__ import annotations

import re
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence, TypeVar

import requests

from .corpus import estimate_tokens, find_citation_keys, split_paragraphs
from .errors import BackendError, BudgetExceeded, ScriptExhausted

SYSTEM = "system"
USER = "user"
ASSISTANT = "assistant"

T = TypeVar("T")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in (SYSTEM, USER, ASSISTANT):
            raise ValueError(f"unknown role {self.role!r}")


@dataclass(frozen=True)
class TokenBudget:
    """Context-window accounting: total window and reply headroom."""

    max_total: int = 8192
    reserved_for_reply: int = 1024

    def __post_init__(self):
        if not 0 < self.reserved_for_reply < self.max_total:
            raise ValueError(
                f"need 0 < reserved_for_reply < max_total, got "
                f"{self.reserved_for_reply} / {self.max_total}"
            )

    @property
    def prompt_allowance(self) -> int:
        return self.max_total - self.reserved_for_reply


def validate_messages(messages: Sequence[ChatMessage]) -> None:
    if not messages:
        raise ValueError("empty message list")
    system_positions = [i for i, m in enumerate(messages) if m.role == SYSTEM]
    if system_positions != [0]:
        raise ValueError("exactly one system message required, in first position")
    for m in messages:
        if m.role in (USER, ASSISTANT) and not m.content:
            raise ValueError(f"{m.role} message has empty content")


def request_token_estimate(messages: Sequence[ChatMessage]) -> int:
    return sum(estimate_tokens(m.content) for m in messages)


class ChatBackend(Protocol):
    def complete(self, messages: Sequence[ChatMessage]) -> str: ...


def complete_chat(
    messages: Sequence[ChatMessage],
    backend: ChatBackend,
    budget: TokenBudget | None = None,
) -> str:
    """Send one chat request; budget is checked before any backend call."""
    budget = budget or TokenBudget()
    validate_messages(messages)
    estimated = request_token_estimate(messages)
    if estimated > budget.prompt_allowance:
        raise BudgetExceeded(
            f"request estimated at {estimated} tokens exceeds allowance of "
            f"{budget.prompt_allowance} ({budget.max_total} minus "
            f"{budget.reserved_for_reply} reserved for the reply)"
        )
    return backend.complete(messages)


def with_retry(
    call: Callable[[], T],
    max_attempts: int = 3,
    base_delay: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
) -> T:
    """Retry transient backend failures with exponential backoff.

    Only BackendError instances flagged retryable (transport, 429, 5xx) are
    retried; everything else propagates immediately.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    attempt = 0
    while True:
        attempt += 1
        try:
            return call()
        except BackendError as exc:
            if not exc.retryable or attempt >= max_attempts:
                raise
            sleep(base_delay * 2 ** (attempt - 1))


class ScriptedChatBackend:
    """Strict FIFO mock: returns scripted replies, records every request.

    The request log is the instrumentation surface budget-safety and
    determinism checks read.
    """

    def __init__(self, replies: Sequence[str] = ()):
        self._replies = list(replies)
        self.requests: list[tuple[ChatMessage, ...]] = []
        self._lock = threading.Lock()

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        with self._lock:
            self.requests.append(tuple(messages))
            if not self._replies:
                raise ScriptExhausted()
            return self._replies.pop(0)

    @property
    def calls(self) -> int:
        return len(self.requests)


class FlakyChatBackend:
    """Test double that fails a set number of times before succeeding."""

    def __init__(self, failures: Sequence[BackendError], reply: str = "ok"):
        self._failures = list(failures)
        self._reply = reply
        self.calls = 0

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        self.calls += 1
        if self._failures:
            raise self._failures.pop(0)
        return self._reply


_PERCENT_RE = re.compile(r"(\d+(?:\.\d+)?)% of the original")


class RuleBasedMockBackend:
    """Offline stand-in that reacts to the request instead of a script.

    Pure function of the message list, so mock-mode pipelines stay
    deterministic without pre-computing reply scripts:

    - distillation requests get a real word-level compression of the
      document at the requested ratio, paragraph structure preserved;
    - condensation requests get the follow-up question echoed back;
    - anything else gets a short answer citing the first context key
      found in the request (or a stock sentence when there is none).
    """

    def __init__(self):
        self.requests: list[tuple[ChatMessage, ...]] = []
        self._lock = threading.Lock()

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        with self._lock:
            self.requests.append(tuple(messages))
        system = messages[0].content
        user = messages[-1].content
        if "Distill each paragraph" in user:
            return self._distill(user)
        if "rephrase the follow-up" in system:
            return self._condense(user)
        return self._answer(user)

    @staticmethod
    def _distill(prompt: str) -> str:
        match = _PERCENT_RE.search(prompt)
        ratio = float(match.group(1)) / 100.0 if match else 0.5
        # Document body follows the instruction after the first blank line.
        _, _, body = prompt.partition("\n\n")
        compressed = []
        for block in split_paragraphs(body):
            words = block.split()
            keep = max(1, round(len(words) * ratio))
            compressed.append(" ".join(words[:keep]))
        return "\n\n".join(compressed)

    @staticmethod
    def _condense(prompt: str) -> str:
        marker = "Follow-up:"
        position = prompt.rfind(marker)
        follow_up = prompt[position + len(marker):].strip() if position >= 0 else prompt
        return follow_up or "What does the provided context say?"

    @staticmethod
    def _answer(prompt: str) -> str:
        keys = find_citation_keys(prompt)
        if keys:
            return (
                f"Based on the provided documents, see {keys[0]} for the "
                "most relevant discussion of this question."
            )
        return "The provided documents do not address this question."


def _post_json(
    url: str,
    payload: dict,
    api_key: str,
    timeout: float,
) -> dict:
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    try:
        response = requests.post(url, json=payload, headers=headers, timeout=timeout)
    except requests.RequestException as exc:
        raise BackendError(f"transport failure: {exc}") from exc
    if response.status_code != 200:
        raise BackendError(
            f"HTTP {response.status_code} from {url}: {response.text[:200]}",
            status_code=response.status_code,
        )
    try:
        return response.json()
    except ValueError as exc:
        raise BackendError(f"non-JSON reply from {url}") from exc


@dataclass
class OpenAIChatBackend:
    """OpenAI-compatible chat-completions client.

    Base URL, model, and key come from configuration; nothing is
    hard-coded. One HTTP call per complete() invocation; retry policy is
    applied around the transport.
    """

    base_url: str
    model: str
    api_key: str = ""
    temperature: float = 0.0
    timeout: float = 60.0
    max_attempts: int = 3
    sleep: Callable[[float], None] = field(default=time.sleep, repr=False)

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": self.temperature,
        }
        url = self.base_url.rstrip("/") + "/chat/completions"

        def call() -> dict:
            return _post_json(url, payload, self.api_key, self.timeout)

        data = with_retry(call, max_attempts=self.max_attempts, sleep=self.sleep)
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed chat reply: {exc}") from exc
        if content is None:
            raise BackendError("chat reply had null content")
        return content


__all__ = [
    "ASSISTANT",
    "ChatBackend",
    "ChatMessage",
    "FlakyChatBackend",
    "OpenAIChatBackend",
    "RuleBasedMockBackend",
    "SYSTEM",
    "ScriptedChatBackend",
    "TokenBudget",
    "USER",
    "complete_chat",
    "request_token_estimate",
    "validate_messages",
    "with_retry",
]
