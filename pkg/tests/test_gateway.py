import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from devinv.corpus import normalize_text
from devinv.errors import (
    ContextTooLarge,
    CredentialMissing,
    DimensionMismatch,
    EmptyInput,
    Exhausted,
    GatewayError,
    ReplayMiss,
)
from devinv.extraction import ExtractionTask, build_prompt
from devinv.gateway import (
    ProviderConfig,
    PromptBundle,
    TranscriptStore,
    TransientProviderError,
    _token_bucket,
    bundle_digest,
    chat,
    embed_batch,
    hash_embed,
)
from devinv.index import cosine_similarity

words = st.lists(
    st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=8),
    min_size=1,
    max_size=12,
)


# --- provider config validation ------------------------------------------------

def test_remote_requires_endpoint():
    with pytest.raises(ValueError):
        ProviderConfig(kind="remote_chat")


def test_offline_forbids_endpoint():
    with pytest.raises(ValueError):
        ProviderConfig(kind="hash_embed", endpoint_url="https://x")


def test_remote_gets_default_credential_env():
    config = ProviderConfig(kind="remote_chat", endpoint_url="https://x", model_name="m")
    assert config.api_key_env == "DEVINV_API_KEY"


def test_bundle_requires_question():
    with pytest.raises(ValueError):
        PromptBundle(intro="i", context="c", question="")


# --- hash embedding --------------------------------------------------------------

def bucket_count_oracle(text, dimension, seed):
    """Independent accumulation: count per bucket, then L2-normalize."""
    tokens = normalize_text(text).split()
    counts = [0.0] * dimension
    for token in tokens:
        counts[_token_bucket(token, seed, dimension)] += 1.0
    norm = math.sqrt(sum(c * c for c in counts))
    return [c / norm for c in counts]


def test_hash_embed_matches_bucket_count_oracle():
    vector = hash_embed("broken glass vial found", 64, 42)
    expected = bucket_count_oracle("broken glass vial found", 64, 42)
    assert vector.shape == (64,)
    for got, want in zip(vector, expected):
        assert got == pytest.approx(want, abs=1e-12)


def test_hash_embed_deterministic():
    a = hash_embed("glass vial", 64, 42)
    b = hash_embed("glass vial", 64, 42)
    assert np.array_equal(a, b)
    assert cosine_similarity(a, b) == 1.0


def test_hash_embed_disjoint_tokens_orthogonal():
    # bucket(alpha)=42, bucket(beta)=35, bucket(gamma)=57, bucket(delta)=10
    # under seed 42 / dim 64: no collisions, so supports are disjoint
    a = hash_embed("alpha beta", 64, 42)
    b = hash_embed("gamma delta", 64, 42)
    assert cosine_similarity(a, b) == 0.0


def test_hash_embed_lexical_relatedness_ordering():
    related = cosine_similarity(
        hash_embed("glass glass vial", 64, 42), hash_embed("glass vial", 64, 42)
    )
    unrelated = cosine_similarity(
        hash_embed("glass vial", 64, 42), hash_embed("particle alarm", 64, 42)
    )
    # bucket-count oracle: dot 3 / (sqrt(5)*sqrt(2)); disjoint supports -> 0
    assert related == pytest.approx(3 / math.sqrt(10), abs=1e-12)
    assert related > unrelated


@given(words)
def test_hash_embed_unit_norm(tokens):
    vector = hash_embed(" ".join(tokens), 32, 7)
    assert abs(np.linalg.norm(vector) - 1.0) <= 1e-9


def test_hash_embed_rejects_empty():
    with pytest.raises(EmptyInput):
        hash_embed("   \n", 64, 42)
    with pytest.raises(ValueError):
        hash_embed("glass", 1, 42)


# --- embed_batch ------------------------------------------------------------------

def test_embed_batch_order_and_determinism(hash_provider):
    batch = embed_batch(["glass vial", "particle alarm", "glass vial"], hash_provider)
    assert batch.shape == (3, 64)
    assert np.array_equal(batch[0], batch[2])
    assert np.array_equal(batch[0], hash_embed("glass vial", 64, 42))


def test_embed_batch_empty_inputs(hash_provider):
    with pytest.raises(EmptyInput):
        embed_batch([], hash_provider)
    with pytest.raises(EmptyInput):
        embed_batch([""], hash_provider)


def test_embed_batch_split_transparency():
    texts = [f"token{i} filler" for i in range(9)]
    whole = embed_batch(texts, ProviderConfig(kind="hash_embed", dimension=16, seed=1,
                                              batch_limit=256))
    split = embed_batch(texts, ProviderConfig(kind="hash_embed", dimension=16, seed=1,
                                              batch_limit=2))
    assert np.array_equal(whole, split)


def _remote_embed(dimension=4, batch_limit=256, max_retries=1):
    return ProviderConfig(
        kind="remote_embed",
        endpoint_url="https://embed.example/v1",
        model_name="embedder",
        api_key_env="TEST_KEY",
        dimension=dimension,
        batch_limit=batch_limit,
        max_retries=max_retries,
    )


def test_remote_embed_splits_batches(monkeypatch):
    monkeypatch.setenv("TEST_KEY", "secret")
    calls = []

    def transport(url, payload, headers, timeout):
        calls.append(list(payload["input"]))
        # return rows deliberately out of order; reassembly sorts by index
        data = [
            {"index": i, "embedding": [float(len(t)), 0.0, 0.0, 1.0]}
            for i, t in enumerate(payload["input"])
        ]
        return 200, {"data": list(reversed(data))}

    batch = embed_batch(["a", "bb", "ccc", "dddd", "eeeee"],
                        _remote_embed(batch_limit=2), transport=transport)
    assert [len(c) for c in calls] == [2, 2, 1]
    assert [row[0] for row in batch] == [1.0, 2.0, 3.0, 4.0, 5.0]


def test_remote_embed_dimension_mismatch(monkeypatch):
    monkeypatch.setenv("TEST_KEY", "secret")

    def transport(url, payload, headers, timeout):
        return 200, {"data": [{"index": 0, "embedding": [1.0, 2.0]}]}

    with pytest.raises(DimensionMismatch):
        embed_batch(["x"], _remote_embed(dimension=4), transport=transport)


# --- replay chat -----------------------------------------------------------------

def test_replay_returns_scripted_answer(corpus, templates, replay_provider):
    record = corpus.get("inc-001")
    bundle = build_prompt(record, ExtractionTask.root_cause, templates)
    outcome = chat(bundle, replay_provider)
    assert outcome.text == (
        "stopper debris shed by a worn feeder bowl introduced visible "
        "particles during filling"
    )
    assert outcome.provider_id == "replay"
    assert outcome.attempt_count == 1


def test_replay_identical_bundle_identical_text(corpus, templates, replay_provider):
    record = corpus.get("inc-003")
    bundle = build_prompt(record, ExtractionTask.site, templates)
    first = chat(bundle, replay_provider).text
    second = chat(bundle, replay_provider).text
    assert first == second == "cork"


def test_replay_survives_store_reload(replay_provider, fixtures_dir):
    store = TranscriptStore.load(fixtures_dir / "transcripts" / "replay.jsonl")
    bundle = PromptBundle(intro="", context="", question="what is a deviation in pharmaceutical manufacturing?")
    assert store.get(bundle_digest(bundle)) == chat(bundle, replay_provider).text


def test_replay_miss_on_unscripted_bundle(tmp_path):
    transcript = tmp_path / "empty.jsonl"
    transcript.write_text("")
    provider = ProviderConfig(kind="replay_chat", transcript_path=str(transcript))
    bundle = PromptBundle(intro="", context="", question="never scripted")
    with pytest.raises(ReplayMiss) as err:
        chat(bundle, provider)
    assert err.value.digest == bundle_digest(bundle)


def test_digest_tracks_every_bundle_part():
    base = PromptBundle(intro="i", context="c", question="q")
    assert bundle_digest(base) != bundle_digest(PromptBundle("i2", "c", "q"))
    assert bundle_digest(base) != bundle_digest(PromptBundle("i", "c2", "q"))
    assert bundle_digest(base) != bundle_digest(PromptBundle("i", "c", "q2"))


# --- remote chat and the retry schedule ----------------------------------------

def _remote_chat(max_retries=3, **kwargs):
    return ProviderConfig(
        kind="remote_chat",
        endpoint_url="https://chat.example/v1",
        model_name="chatter",
        api_key_env="TEST_KEY",
        max_retries=max_retries,
        **kwargs,
    )


BUNDLE = PromptBundle(intro="intro", context="ctx", question="q?")


def test_credential_missing(monkeypatch):
    monkeypatch.delenv("TEST_KEY", raising=False)
    with pytest.raises(CredentialMissing):
        chat(BUNDLE, _remote_chat())


def test_remote_chat_success_and_message_order(monkeypatch):
    monkeypatch.setenv("TEST_KEY", "secret")
    seen = {}

    def transport(url, payload, headers, timeout):
        seen.update(payload=payload, headers=headers)
        return 200, {"choices": [{"message": {"content": "hello"}}]}

    outcome = chat(BUNDLE, _remote_chat(), transport=transport)
    assert outcome.text == "hello"
    assert outcome.attempt_count == 1
    assert seen["payload"]["messages"] == [
        {"role": "system", "content": "intro"},
        {"role": "user", "content": "ctx"},
        {"role": "user", "content": "q?"},
    ]
    assert seen["headers"]["Authorization"] == "Bearer secret"


def test_retry_schedule_and_exhaustion(monkeypatch):
    monkeypatch.setenv("TEST_KEY", "secret")
    delays = []

    def transport(url, payload, headers, timeout):
        raise TransientProviderError("HTTP 503")

    with pytest.raises(Exhausted) as err:
        chat(BUNDLE, _remote_chat(max_retries=3), transport=transport,
             sleep=delays.append)
    assert err.value.attempts == 4  # max_retries + 1
    assert len(delays) == 3
    for k, delay in enumerate(delays, start=1):
        assert delay >= 1.0 * 2 ** (k - 1)  # base 1s, doubling, jitter additive


def test_retry_recovers_on_second_attempt(monkeypatch):
    monkeypatch.setenv("TEST_KEY", "secret")
    attempts = []

    def transport(url, payload, headers, timeout):
        attempts.append(1)
        if len(attempts) == 1:
            raise TransientProviderError("timeout")
        return 200, {"choices": [{"message": {"content": "ok"}}]}

    outcome = chat(BUNDLE, _remote_chat(), transport=transport, sleep=lambda _: None)
    assert outcome.text == "ok"
    assert outcome.attempt_count == 2


def test_non_transient_error_does_not_retry(monkeypatch):
    monkeypatch.setenv("TEST_KEY", "secret")
    slept = []

    def transport(url, payload, headers, timeout):
        return 401, {"error": "bad key"}

    with pytest.raises(GatewayError):
        chat(BUNDLE, _remote_chat(), transport=transport, sleep=slept.append)
    assert slept == []


def test_context_too_large():
    provider = ProviderConfig(kind="replay_chat", transcript_path="unused",
                              max_context_chars=10)
    with pytest.raises(ContextTooLarge):
        chat(PromptBundle(intro="", context="x" * 50, question="q"), provider)


def test_chat_rejects_embed_provider(hash_provider):
    with pytest.raises(ValueError):
        chat(BUNDLE, hash_provider)
