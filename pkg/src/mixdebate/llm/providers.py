"""LLM providers: a scripted test double and an OpenAI-compatible HTTP client."""
from __future__ import annotations

import json
import os
import threading
from collections import deque
from dataclasses import dataclass
from os import PathLike
from typing import Iterable, Mapping, Protocol

import httpx

from ..errors import ProviderError, ScriptExhausted
from .schemas import LlmRole


@dataclass(frozen=True)
class LlmRequest:
    role: LlmRole
    rendered_prompt: str
    temperature: float
    max_tokens: int = 512
    final: bool = False


@dataclass(frozen=True)
class Completion:
    text: str
    prompt_tokens: int
    completion_tokens: int
    estimated: bool = False


class Provider(Protocol):
    def complete(self, request: LlmRequest, caller: str = "") -> Completion: ...


def word_count(text: str) -> int:
    return len(text.split())


class ScriptedProvider:
    """Replays canned replies from per-role queues.

    A queue keyed ``"<role>@<caller>"`` (callers: ``kg``, ``rag``, ``final``,
    ``orchestrator``) takes precedence over the plain ``"<role>"`` queue, so
    agents running in parallel can be scripted without contending for a
    shared queue. Each queue has its own lock.
    """

    def __init__(self, script: Mapping[str, Iterable[str]]):
        valid = {r.value for r in LlmRole}
        self._queues: dict[str, deque[str]] = {}
        self._locks: dict[str, threading.Lock] = {}
        for key, responses in script.items():
            role = key.split("@", 1)[0]
            if role not in valid:
                raise ValueError(f"unknown role in script: {key!r}")
            if isinstance(responses, str) or not all(isinstance(r, str) for r in responses):
                raise ValueError(f"script entry {key!r} must be a list of strings")
            self._queues[key] = deque(responses)
            self._locks[key] = threading.Lock()
        self._count_lock = threading.Lock()
        self.consumed = 0

    @classmethod
    def from_file(cls, path: str | PathLike) -> "ScriptedProvider":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def remaining(self) -> dict[str, int]:
        return {k: len(q) for k, q in self._queues.items()}

    def complete(self, request: LlmRequest, caller: str = "") -> Completion:
        role = LlmRole(request.role).value
        for key in (f"{role}@{caller}", role):
            queue = self._queues.get(key)
            if queue is None:
                continue
            with self._locks[key]:
                if not queue:
                    continue
                text = queue.popleft()
            with self._count_lock:
                self.consumed += 1
            return Completion(text, word_count(request.rendered_prompt), word_count(text), estimated=True)
        raise ScriptExhausted(role)


class HttpProvider:
    """Chat-completions client for OpenAI-compatible endpoints (single attempt per call)."""

    RETRIABLE_STATUS = {408, 409, 429}

    def __init__(
        self,
        base_url: str | None = None,
        model_name: str = "deepseek-chat",
        api_key_env: str = "DOM_API_KEY",
        *,
        timeout: float = 60.0,
        client: httpx.Client | None = None,
    ):
        base_url = base_url or os.environ.get("DOM_BASE_URL")
        if not base_url:
            raise ValueError("no base URL given and DOM_BASE_URL is unset")
        self.base_url = base_url.rstrip("/")
        self.model_name = model_name
        self.api_key_env = api_key_env
        self._client = client or httpx.Client(timeout=timeout)

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self.api_key_env) or os.environ.get("DOM_API_KEY")
        return {"Authorization": f"Bearer {key}"} if key else {}

    def complete(self, request: LlmRequest, caller: str = "") -> Completion:
        body = {
            "model": self.model_name,
            "messages": [{"role": "user", "content": request.rendered_prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        try:
            resp = self._client.post(f"{self.base_url}/chat/completions", json=body, headers=self._headers())
        except httpx.HTTPError as exc:
            raise ProviderError(f"chat completion request failed: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderError(
                f"provider returned {resp.status_code}: {resp.text[:300]}",
                status=resp.status_code,
                retriable=resp.status_code >= 500 or resp.status_code in self.RETRIABLE_STATUS,
            )
        try:
            data = resp.json()
            text = data["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed chat completion body: {exc}", retriable=False) from exc
        usage = data.get("usage") or {}
        if "prompt_tokens" in usage and "completion_tokens" in usage:
            return Completion(text, int(usage["prompt_tokens"]), int(usage["completion_tokens"]))
        return Completion(text, word_count(request.rendered_prompt), word_count(text), estimated=True)

    def close(self) -> None:
        self._client.close()
