"""Chat-completion client with a content-addressed record/replay cache."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import httpx

log = logging.getLogger(__name__)

TEMPERATURE = 0.0
MAX_TOKENS = 4096
DEFAULT_ENDPOINT = "https://api.openai.com/v1"
API_KEY_ENV = "TOM_API_KEY"
MODES = ("live", "record", "replay")


class LLMError(RuntimeError):
    def __init__(self, message: str, status: int | None = None, attempts: int = 0):
        super().__init__(message)
        self.status = status
        self.attempts = attempts


class ReplayMissError(LLMError):
    def __init__(self, key: str):
        super().__init__(f"no cached response for key {key}")
        self.key = key


@dataclass(frozen=True)
class CompletionRequest:
    model: str
    messages: tuple[tuple[str, str], ...]
    template_id: str
    temperature: float = TEMPERATURE
    max_tokens: int = MAX_TOKENS

    @classmethod
    def for_prompt(cls, model: str, template_id: str, prompt: str) -> CompletionRequest:
        return cls(model, (("user", prompt),), template_id)

    @property
    def prompt(self) -> str:
        return "\n\n".join(content for _, content in self.messages)

    def body(self) -> dict:
        return {
            "model": self.model,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "messages": [{"role": r, "content": c} for r, c in self.messages],
        }


@dataclass(frozen=True)
class Completion:
    text: str
    key: str
    from_cache: bool
    latency_ms: int | None = None
    usage: dict = field(default_factory=dict)


def cache_key(endpoint: str, model: str, template_id: str, prompt: str) -> str:
    blob = json.dumps([endpoint.rstrip("/"), model, template_id, prompt], ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class ResponseCache:
    """One file per key; the first writer wins and later writes are ignored."""

    def __init__(self, directory: str | os.PathLike):
        self.directory = Path(directory)

    def path(self, key: str) -> Path:
        return self.directory / key

    def get(self, key: str) -> str | None:
        try:
            return self.path(key).read_bytes().decode("utf-8")
        except FileNotFoundError:
            return None

    def put(self, key: str, text: str) -> str:
        """Store ``text`` unless ``key`` exists; return what the cache holds."""
        self.directory.mkdir(parents=True, exist_ok=True)
        target = self.path(key)
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(text.encode("utf-8"))
            os.link(tmp, target)
        except FileExistsError:
            pass
        finally:
            os.unlink(tmp)
        return target.read_bytes().decode("utf-8")

    def __len__(self) -> int:
        if not self.directory.exists():
            return 0
        return sum(1 for p in self.directory.iterdir() if not p.name.startswith("."))


_RETRY_STATUS = frozenset({408, 409, 429, 500, 502, 503, 504})


class LLMClient:
    """Issues completions in one of three modes and counts every call."""

    def __init__(
        self,
        mode: str = "replay",
        cache: ResponseCache | None = None,
        endpoint: str = DEFAULT_ENDPOINT,
        api_key: str | None = None,
        concurrency: int = 4,
        max_attempts: int = 4,
        backoff: float = 1.0,
        timeout: float = 120.0,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        if mode in ("record", "replay") and cache is None:
            raise ValueError(f"{mode} mode needs a cache directory")
        if concurrency < 1:
            raise ValueError("concurrency must be at least 1")
        self.mode = mode
        self.cache = cache
        self.endpoint = endpoint.rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.max_attempts = max_attempts
        self.backoff = backoff
        self.sleep = sleep
        self._slots = threading.BoundedSemaphore(concurrency)
        self._lock = threading.Lock()
        self.calls = 0
        self.calls_by_template: dict[str, int] = {}
        self._http: httpx.Client | None = None
        if mode != "replay":
            self._http = httpx.Client(timeout=timeout, transport=transport)

    def close(self) -> None:
        if self._http is not None:
            self._http.close()

    def __enter__(self) -> LLMClient:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def key_for(self, request: CompletionRequest) -> str:
        return cache_key(self.endpoint, request.model, request.template_id, request.prompt)

    def complete(self, request: CompletionRequest) -> Completion:
        with self._lock:
            self.calls += 1
            self.calls_by_template[request.template_id] = (
                self.calls_by_template.get(request.template_id, 0) + 1
            )
        key = self.key_for(request)
        if self.mode == "replay":
            assert self.cache is not None
            text = self.cache.get(key)
            if text is None:
                raise ReplayMissError(key)
            return Completion(text, key, from_cache=True)

        start = time.monotonic()
        text, usage = self._post(request)
        latency = int((time.monotonic() - start) * 1000)
        if self.mode == "record":
            assert self.cache is not None
            text = self.cache.put(key, text)
        return Completion(text, key, from_cache=False, latency_ms=latency, usage=usage)

    def _post(self, request: CompletionRequest) -> tuple[str, dict]:
        assert self._http is not None
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = f"{self.endpoint}/chat/completions"
        status = None
        last_error = ""
        for attempt in range(1, self.max_attempts + 1):
            try:
                with self._slots:
                    resp = self._http.post(url, json=request.body(), headers=headers)
            except httpx.TransportError as exc:
                status, last_error = None, f"{type(exc).__name__}: {exc}"
            else:
                status = resp.status_code
                if status == 200:
                    try:
                        data = resp.json()
                        return data["choices"][0]["message"]["content"], data.get("usage") or {}
                    except (ValueError, KeyError, IndexError, TypeError) as exc:
                        raise LLMError(
                            f"malformed completion response: {exc}", status, attempt
                        ) from exc
                last_error = resp.text[:200]
                if status not in _RETRY_STATUS:
                    raise LLMError(f"HTTP {status}: {last_error}", status, attempt)
            if attempt < self.max_attempts:
                delay = self.backoff * 2 ** (attempt - 1)
                log.warning("completion attempt %d failed (%s), retrying in %.1fs", attempt, last_error, delay)
                self.sleep(delay)
        raise LLMError(
            f"completion failed after {self.max_attempts} attempts (status {status}): {last_error}",
            status,
            self.max_attempts,
        )
