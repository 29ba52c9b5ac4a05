"""Provider-agnostic gateway for chat-completion and text-embedding calls.

Two remote kinds speak the OpenAI-compatible wire shape over HTTP. Two
offline kinds make every test runnable without network access:

  replay_chat  scripted responses keyed by a digest of the full prompt
               bundle, loaded from a line-delimited transcript file
  hash_embed   deterministic term-frequency feature hashing

All embeddings are float64 numpy arrays; a batch is an (n, dim) array in
input order.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import requests

from .corpus import normalize_text
from .errors import (
    ContextTooLarge,
    CredentialMissing,
    DimensionMismatch,
    EmptyInput,
    Exhausted,
    GatewayError,
    ReplayMiss,
)

REMOTE_KINDS = ("remote_chat", "remote_embed")
OFFLINE_KINDS = ("replay_chat", "hash_embed")
DEFAULT_API_KEY_ENV = "DEVINV_API_KEY"
RETRY_BASE_SECONDS = 1.0
RETRY_JITTER_SECONDS = 0.5


@dataclass(frozen=True)
class ProviderConfig:
    kind: str
    endpoint_url: str | None = None
    model_name: str | None = None
    api_key_env: str | None = None
    timeout: float = 30.0
    max_retries: int = 3
    max_parallel: int = 1
    # offline / behavioral knobs
    dimension: int = 1536
    seed: int = 0
    transcript_path: str | None = None
    batch_limit: int = 256
    max_context_chars: int | None = None

    def __post_init__(self):
        if self.kind not in REMOTE_KINDS + OFFLINE_KINDS:
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.kind in REMOTE_KINDS:
            if not self.endpoint_url:
                raise ValueError(f"{self.kind} requires endpoint_url")
            if not self.api_key_env:
                object.__setattr__(self, "api_key_env", DEFAULT_API_KEY_ENV)
        else:
            if self.endpoint_url or self.api_key_env:
                raise ValueError(f"{self.kind} forbids endpoint_url/api_key_env")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be positive")

    @property
    def provider_id(self) -> str:
        if self.kind in REMOTE_KINDS:
            return self.model_name or self.kind
        if self.kind == "replay_chat":
            return self.model_name or "replay"
        return f"hash_embed-d{self.dimension}-s{self.seed}"


@dataclass(frozen=True)
class PromptBundle:
    """Three-part prompt: introduction, supporting context, question."""

    intro: str
    context: str
    question: str

    def __post_init__(self):
        if not self.question:
            raise ValueError("question must be non-empty")

    @property
    def total_chars(self) -> int:
        return len(self.intro) + len(self.context) + len(self.question)


@dataclass(frozen=True)
class ChatOutcome:
    text: str
    provider_id: str
    latency_ms: float
    attempt_count: int


def bundle_digest(bundle: PromptBundle) -> str:
    """Stable hex digest of the full bundle; any prompt drift changes it."""
    payload = json.dumps(
        [bundle.intro, bundle.context, bundle.question], ensure_ascii=False
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# --- transcript store -------------------------------------------------------

class TranscriptStore:
    """Line-delimited mapping of bundle digest (hex) to scripted response."""

    def __init__(self, responses: dict[str, str], path: str | None = None):
        self._responses = responses
        self.path = path

    @classmethod
    def load(cls, path: str | Path) -> "TranscriptStore":
        responses: dict[str, str] = {}
        with Path(path).open(encoding="utf-8") as handle:
            for line in handle:
                if not line.strip():
                    continue
                entry = json.loads(line)
                responses[entry["digest"]] = entry["response"]
        return cls(responses, path=str(path))

    @staticmethod
    def write(path: str | Path, responses: dict[str, str]) -> None:
        with Path(path).open("w", encoding="utf-8") as handle:
            for digest, response in responses.items():
                handle.write(
                    json.dumps({"digest": digest, "response": response},
                               ensure_ascii=False) + "\n"
                )

    def get(self, digest: str) -> str | None:
        return self._responses.get(digest)

    def __len__(self) -> int:
        return len(self._responses)


_store_cache: dict[str, tuple[int, TranscriptStore]] = {}


def _load_transcripts(path: str) -> TranscriptStore:
    resolved = str(Path(path).resolve())
    mtime = Path(resolved).stat().st_mtime_ns
    cached = _store_cache.get(resolved)
    if cached is None or cached[0] != mtime:
        cached = (mtime, TranscriptStore.load(resolved))
        _store_cache[resolved] = cached
    return cached[1]


# --- retry machinery --------------------------------------------------------

class TransientProviderError(GatewayError):
    """Timeout or HTTP 429/5xx; eligible for retry."""


def _with_retries(
    attempt_fn: Callable[[], object],
    config: ProviderConfig,
    sleep: Callable[[float], None],
    rng: random.Random,
) -> tuple[object, int]:
    """Run attempt_fn with exponential backoff; returns (result, attempts)."""
    last_error: Exception | None = None
    for attempt in range(1, config.max_retries + 2):
        try:
            return attempt_fn(), attempt
        except TransientProviderError as exc:
            last_error = exc
            if attempt > config.max_retries:
                break
            delay = RETRY_BASE_SECONDS * (2 ** (attempt - 1))
            delay += rng.uniform(0.0, RETRY_JITTER_SECONDS)
            sleep(delay)
    raise Exhausted(last_error, attempts=config.max_retries + 1)


def _default_transport(
    url: str, payload: dict, headers: dict, timeout: float
) -> tuple[int, dict]:
    try:
        response = requests.post(url, json=payload, headers=headers, timeout=timeout)
    except (requests.Timeout, requests.ConnectionError) as exc:
        raise TransientProviderError(str(exc))
    if response.status_code == 429 or response.status_code >= 500:
        raise TransientProviderError(f"HTTP {response.status_code}")
    return response.status_code, response.json()


def _auth_headers(config: ProviderConfig) -> dict[str, str]:
    key = os.environ.get(config.api_key_env or DEFAULT_API_KEY_ENV)
    if not key:
        raise CredentialMissing(config.api_key_env or DEFAULT_API_KEY_ENV)
    return {"Authorization": f"Bearer {key}"}


# --- chat -------------------------------------------------------------------

def chat(
    bundle: PromptBundle,
    config: ProviderConfig,
    transport: Callable[..., tuple[int, dict]] | None = None,
    sleep: Callable[[float], None] = time.sleep,
    rng: random.Random | None = None,
) -> ChatOutcome:
    """Send a prompt bundle to a chat-capable provider.

    Remote providers get the bundle as an ordered message sequence and are
    retried with exponential backoff on transient failures. The replay
    provider returns the scripted response for the bundle's digest and
    raises ReplayMiss on a fixture gap.
    """
    if config.kind not in ("remote_chat", "replay_chat"):
        raise ValueError(f"chat requires a chat provider, got {config.kind}")
    if config.max_context_chars and bundle.total_chars > config.max_context_chars:
        raise ContextTooLarge(bundle.total_chars, config.max_context_chars)

    started = time.perf_counter()
    if config.kind == "replay_chat":
        if not config.transcript_path:
            raise ValueError("replay_chat requires transcript_path")
        digest = bundle_digest(bundle)
        text = _load_transcripts(config.transcript_path).get(digest)
        if text is None:
            raise ReplayMiss(digest)
        latency = (time.perf_counter() - started) * 1000.0
        return ChatOutcome(text, config.provider_id, latency, attempt_count=1)

    headers = _auth_headers(config)
    messages = [{"role": "system", "content": bundle.intro}] if bundle.intro else []
    if bundle.context:
        messages.append({"role": "user", "content": bundle.context})
    messages.append({"role": "user", "content": bundle.question})
    payload = {"model": config.model_name, "messages": messages}
    post = transport or _default_transport

    def attempt():
        status, body = post(config.endpoint_url, payload, headers, config.timeout)
        if status != 200:
            raise GatewayError(f"chat endpoint returned HTTP {status}")
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise GatewayError("malformed chat completion response")

    text, attempts = _with_retries(attempt, config, sleep, rng or random.Random())
    latency = (time.perf_counter() - started) * 1000.0
    return ChatOutcome(str(text), config.provider_id, latency, attempt_count=attempts)


# --- embeddings --------------------------------------------------------------

def _token_bucket(token: str, seed: int, dimension: int) -> int:
    digest = hashlib.blake2b(
        token.encode("utf-8"),
        digest_size=8,
        key=seed.to_bytes(8, "big", signed=True),
    ).digest()
    return int.from_bytes(digest, "big") % dimension


def hash_embed(text: str, dimension: int, seed: int) -> np.ndarray:
    """Deterministic bag-of-words embedding via seeded feature hashing.

    Tokenizes the normalized text on whitespace, accumulates token counts
    into `dimension` buckets, and L2-normalizes. Stable across runs and
    platforms.
    """
    if dimension < 2:
        raise ValueError("dimension must be at least 2")
    tokens = normalize_text(text).split()
    if not tokens:
        raise EmptyInput()
    vector = np.zeros(dimension, dtype=np.float64)
    for token in tokens:
        vector[_token_bucket(token, seed, dimension)] += 1.0
    vector /= np.linalg.norm(vector)
    return vector


def embed_batch(
    texts: list[str],
    config: ProviderConfig,
    transport: Callable[..., tuple[int, dict]] | None = None,
    sleep: Callable[[float], None] = time.sleep,
    rng: random.Random | None = None,
) -> np.ndarray:
    """Embed texts in input order, returning an (n, dimension) float64 array.

    Batches beyond config.batch_limit are split transparently and the
    results reassembled.
    """
    if config.kind not in ("remote_embed", "hash_embed"):
        raise ValueError(f"embed_batch requires an embed provider, got {config.kind}")
    if not texts:
        raise EmptyInput("no texts to embed")
    if any(not normalize_text(t) for t in texts):
        raise EmptyInput()

    if config.kind == "hash_embed":
        return np.stack([hash_embed(t, config.dimension, config.seed) for t in texts])

    headers = _auth_headers(config)
    post = transport or _default_transport
    chunks: list[np.ndarray] = []
    for start in range(0, len(texts), config.batch_limit):
        chunk = texts[start : start + config.batch_limit]
        payload = {"model": config.model_name, "input": chunk}

        def attempt():
            status, body = post(config.endpoint_url, payload, headers, config.timeout)
            if status != 200:
                raise GatewayError(f"embedding endpoint returned HTTP {status}")
            try:
                rows = sorted(body["data"], key=lambda item: item.get("index", 0))
                return [row["embedding"] for row in rows]
            except (KeyError, TypeError):
                raise GatewayError("malformed embedding response")

        vectors, _ = _with_retries(attempt, config, sleep, rng or random.Random())
        for vec in vectors:
            if len(vec) != config.dimension:
                raise DimensionMismatch(config.dimension, len(vec))
        chunks.append(np.asarray(vectors, dtype=np.float64))
    return np.concatenate(chunks, axis=0)
