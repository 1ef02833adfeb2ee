"""Clients for two remote model capabilities: chat completion and token scoring.

Both speak OpenAI-compatible wire formats: ``POST {base_url}/chat/completions``
for generation, and ``POST {base_url}/completions`` with ``echo=true,
logprobs=1, max_tokens=0`` for per-token logprobs of a text. The client adds
response caching (one file per request hash), retry with exponential backoff
and jitter, a concurrency bound per endpoint, and a replay mode that answers
exclusively from recorded fixtures so tests never touch the network.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .errors import InferenceError, ReplayMissError, ValidationError

API_KEY_ENV = "CURATOR_API_KEY"

BACKOFF_BASE = 0.5
BACKOFF_CAP = 30.0
RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model_id: str
    api_key: str | None = None
    max_concurrency: int = 4
    timeout: float = 60.0
    max_retries: int = 3

    def __post_init__(self):
        if not self.base_url:
            raise ValidationError("base_url is empty")
        if self.max_concurrency < 1:
            raise ValidationError("max_concurrency must be >= 1")
        if self.timeout <= 0:
            raise ValidationError("timeout must be > 0")
        if self.max_retries < 0:
            raise ValidationError("max_retries must be >= 0")


@dataclass(frozen=True)
class TokenScore:
    """One token of a scored text; logprob is absent for the first token
    under the usual echo-scoring convention."""

    token_text: str
    logprob: float | None

    def __post_init__(self):
        if self.logprob is not None and self.logprob > 0:
            raise ValidationError(f"logprob must be <= 0, got {self.logprob}")


@dataclass(frozen=True)
class CacheEntry:
    request_hash: str
    response_body: bytes
    created_at: float


def canonical_body(body: dict) -> str:
    return json.dumps(body, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def request_hash(url: str, model_id: str, body: dict) -> str:
    """Collision-resistant digest over endpoint URL, model id, and request body."""
    payload = f"{url}\n{model_id}\n{canonical_body(body)}"
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class HttpTransport:
    """Thin requests-based POST transport."""

    def __init__(self):
        import requests

        self._session = requests.Session()
        self._requests = requests

    def post(self, url: str, body: dict, headers: dict, timeout: float) -> tuple[int, bytes]:
        try:
            resp = self._session.post(url, json=body, headers=headers, timeout=timeout)
        except self._requests.RequestException as exc:
            raise InferenceError(f"transport failure for {url}: {exc}") from exc
        return resp.status_code, resp.content


class ResponseCache:
    """Directory-backed cache, one file per request hash, atomic writes."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def get(self, key: str) -> bytes | None:
        path = self.directory / key
        try:
            return path.read_bytes()
        except FileNotFoundError:
            return None

    def put(self, key: str, data: bytes) -> None:
        path = self.directory / key
        tmp = path.with_name(f".{key}.tmp.{os.getpid()}.{threading.get_ident()}")
        tmp.write_bytes(data)
        os.replace(tmp, path)

    def entry(self, key: str) -> CacheEntry | None:
        path = self.directory / key
        try:
            return CacheEntry(key, path.read_bytes(), path.stat().st_mtime)
        except FileNotFoundError:
            return None


def load_replay_fixtures(path: str | Path) -> dict[str, str]:
    """Parse a replay fixture file: JSONL of {"request_hash", "response_body"}."""
    fixtures: dict[str, str] = {}
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ValidationError(f"replay fixture not found: {path}") from None
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: line {line_no}: invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict) or "request_hash" not in obj or "response_body" not in obj:
            raise ValidationError(
                f"{path}: line {line_no}: expected object with request_hash and response_body"
            )
        fixtures[obj["request_hash"]] = obj["response_body"]
    return fixtures


class InferenceClient:
    """Chat + scoring client over one endpoint.

    Exactly one of live transport or replay fixtures is active. In replay
    mode no transport exists at all, so no operation can open a network
    connection.
    """

    def __init__(
        self,
        config: EndpointConfig,
        *,
        transport=None,
        replay: dict[str, str] | None = None,
        cache_dir: str | Path | None = None,
        temperature: float = 0.0,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self.temperature = temperature
        self._replay = replay
        self._transport = None if replay is not None else (transport or HttpTransport())
        self._cache = ResponseCache(cache_dir) if cache_dir else None
        self._sleep = sleep
        self._semaphore = threading.BoundedSemaphore(config.max_concurrency)
        self._jitter = random.Random()

    @classmethod
    def with_replay(cls, config: EndpointConfig, path: str | Path) -> "InferenceClient":
        """A client that answers only from the recorded fixture file."""
        return cls(config, replay=load_replay_fixtures(path))

    @property
    def is_replay(self) -> bool:
        return self._replay is not None

    # -- wire plumbing ------------------------------------------------------

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = self.config.api_key or os.environ.get(API_KEY_ENV)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _backoff_delay(self, attempt: int) -> float:
        delay = min(BACKOFF_CAP, BACKOFF_BASE * (2**attempt))
        return delay * (0.5 + 0.5 * self._jitter.random())

    def _roundtrip(self, url: str, body: dict) -> bytes:
        key = request_hash(url, self.config.model_id, body)
        if self._replay is not None:
            recorded = self._replay.get(key)
            if recorded is None:
                raise ReplayMissError(key)
            return recorded.encode("utf-8")
        if self._cache is not None:
            hit = self._cache.get(key)
            if hit is not None:
                return hit
        attempts = self.config.max_retries + 1
        for attempt in range(attempts):
            try:
                with self._semaphore:
                    status, data = self._transport.post(url, body, self._headers(), self.config.timeout)
            except InferenceError:
                if attempt + 1 < attempts:
                    self._sleep(self._backoff_delay(attempt))
                    continue
                raise
            if 200 <= status < 300:
                if self._cache is not None:
                    self._cache.put(key, data)
                return data
            if status in RETRYABLE_STATUSES and attempt + 1 < attempts:
                self._sleep(self._backoff_delay(attempt))
                continue
            detail = data[:200].decode("utf-8", errors="replace")
            raise InferenceError(
                f"terminal HTTP {status} from {url} after {attempt + 1} attempt(s): {detail}"
            )
        raise AssertionError("unreachable")

    @staticmethod
    def _parse_json(data: bytes) -> dict:
        try:
            obj = json.loads(data.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise InferenceError(f"malformed response body: {exc}") from None
        if not isinstance(obj, dict):
            raise InferenceError("malformed response body: expected a JSON object")
        return obj

    # -- operations ---------------------------------------------------------

    def chat_complete(self, messages: Sequence[tuple[str, str] | dict]) -> str:
        """Send a chat request and return the assistant text."""
        normalized = [
            m if isinstance(m, dict) else {"role": m[0], "content": m[1]} for m in messages
        ]
        if not normalized:
            raise ValidationError("messages must be non-empty")
        if normalized[0]["role"] not in ("system", "user"):
            raise ValidationError(f"first message role must be system or user, got {normalized[0]['role']!r}")
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        body = {
            "model": self.config.model_id,
            "messages": normalized,
            "temperature": self.temperature,
        }
        obj = self._parse_json(self._roundtrip(url, body))
        try:
            content = obj["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise InferenceError("malformed chat response: missing choices[0].message.content") from None
        if not isinstance(content, str):
            raise InferenceError("malformed chat response: content is not a string")
        return content

    def score_text(self, text: str) -> list[TokenScore]:
        """Token-level logprobs for ``text`` alone (no source context)."""
        if not text:
            raise ValidationError("text must be non-empty")
        url = self.config.base_url.rstrip("/") + "/completions"
        body = {
            "model": self.config.model_id,
            "prompt": text,
            "echo": True,
            "logprobs": 1,
            "max_tokens": 0,
        }
        obj = self._parse_json(self._roundtrip(url, body))
        try:
            logprobs = obj["choices"][0]["logprobs"]
            tokens = logprobs["tokens"]
            token_logprobs = logprobs["token_logprobs"]
        except (KeyError, IndexError, TypeError):
            raise InferenceError("malformed scoring response: missing choices[0].logprobs") from None
        if not isinstance(tokens, list) or len(tokens) != len(token_logprobs):
            raise InferenceError("malformed scoring response: token/logprob length mismatch")
        scores = [TokenScore(tok, lp) for tok, lp in zip(tokens, token_logprobs)]
        if scores and all(s.logprob is None for s in scores):
            raise InferenceError("endpoint lacks logprob support (no logprobs returned)")
        return scores

    # -- bounded fan-out ----------------------------------------------------

    def _map(self, fn, items):
        results: list = [None] * len(items)
        if not items:
            return results
        with ThreadPoolExecutor(max_workers=self.config.max_concurrency) as pool:
            futures = {pool.submit(fn, item): i for i, item in enumerate(items)}
            for future, i in futures.items():
                try:
                    results[i] = future.result()
                except (InferenceError, ValidationError) as exc:
                    results[i] = exc
        return results

    def chat_complete_many(self, message_lists) -> list:
        """chat_complete over many inputs; failures come back as exceptions in-place."""
        return self._map(self.chat_complete, list(message_lists))

    def score_text_many(self, texts) -> list:
        """score_text over many inputs; failures come back as exceptions in-place."""
        return self._map(self.score_text, list(texts))
