from __future__ import annotations

import hashlib
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor

import httpx
import pytest

from rageval.models.llm import BackendConfig, ChatMessage, ChatRequest, EmbeddingRequest, cache_key
from rageval.services.llm_gateway import LlmGateway, OpenAIBackend, ScriptedBackend
from rageval.services.response_cache import (
    LOCK_STRIPES,
    ResponseCache,
    TranscriptRecorder,
    load_transcript,
)
from rageval.utils.enumerators import Role
from rageval.utils.exceptions import (
    AuthFailure,
    InvalidRequest,
    MalformedResponse,
    RateLimited,
    ScriptedResponseMissing,
)

BASE_URL = "http://llm.test/v1"


def _completion(content: str) -> dict:
    return {
        "id": "chatcmpl-1",
        "object": "chat.completion",
        "created": 0,
        "model": "judge",
        "choices": [
            {
                "index": 0,
                "message": {"role": "assistant", "content": content},
                "finish_reason": "stop",
            }
        ],
        "usage": {"prompt_tokens": 11, "completion_tokens": 3, "total_tokens": 14},
    }


def _embeddings(vectors: list[list[float]], order: list[int] | None = None) -> dict:
    order = order if order is not None else list(range(len(vectors)))
    return {
        "object": "list",
        "model": "embed",
        "data": [{"object": "embedding", "index": i, "embedding": vectors[i]} for i in order],
        "usage": {"prompt_tokens": 4, "total_tokens": 4},
    }


class FakeServer:
    """Serves scripted HTTP responses in order and records the requests it saw."""

    def __init__(self, *responses: httpx.Response):
        self.responses = list(responses)
        self.requests: list[httpx.Request] = []

    def __call__(self, request: httpx.Request) -> httpx.Response:
        self.requests.append(request)
        if len(self.responses) > 1:
            return self.responses.pop(0)
        return self.responses[0]

    def gateway(self, sleeps: list | None = None, cache=None, recorder=None, **config) -> LlmGateway:
        backend_config = BackendConfig(base_url=BASE_URL, **config)
        client = httpx.Client(transport=httpx.MockTransport(self))
        backend = OpenAIBackend(backend_config, api_key="sk-test", http_client=client)
        return LlmGateway(
            backend,
            config=backend_config,
            cache=cache,
            recorder=recorder,
            sleep=(sleeps.append if sleeps is not None else lambda s: None),
        )


def _chat(prompt: str = "Say hi.", **kwargs) -> ChatRequest:
    return ChatRequest.from_prompt("judge", prompt, **kwargs)


def test_chat_returns_content_and_counts_usage():
    server = FakeServer(httpx.Response(200, json=_completion("hi")))
    gateway = server.gateway()

    assert gateway.chat(_chat()) == "hi"
    assert gateway.stats.network_calls == 1
    assert gateway.stats.prompt_tokens == 11
    assert gateway.stats.completion_tokens == 3

    body = json.loads(server.requests[0].content)
    assert body["model"] == "judge"
    assert body["messages"] == [{"role": "user", "content": "Say hi."}]
    assert body["temperature"] == 0.0


def test_seed_hint_is_forwarded():
    server = FakeServer(httpx.Response(200, json=_completion("q?")))
    server.gateway().chat(_chat(temperature=0.7, seed_hint=2))
    assert json.loads(server.requests[0].content)["seed"] == 2


def test_rate_limited_twice_then_success_honours_retry_after():
    limited = httpx.Response(429, json={"error": {"message": "slow down"}}, headers={"retry-after": "2"})
    server = FakeServer(limited, limited, httpx.Response(200, json=_completion("ok")))
    sleeps: list[float] = []
    gateway = server.gateway(sleeps=sleeps)

    assert gateway.chat(_chat()) == "ok"
    assert len(server.requests) == 3
    assert sleeps == [2.0, 2.0]
    assert gateway.stats.retries == 2


def test_retry_after_ms_header():
    limited = httpx.Response(429, json={"error": {"message": "slow down"}}, headers={"retry-after-ms": "250"})
    server = FakeServer(limited, httpx.Response(200, json=_completion("ok")))
    sleeps: list[float] = []
    server.gateway(sleeps=sleeps).chat(_chat())
    assert sleeps == [0.25]


def test_backoff_without_retry_after_is_bounded():
    unavailable = httpx.Response(503, json={"error": {"message": "overloaded"}})
    server = FakeServer(unavailable, unavailable, httpx.Response(200, json=_completion("ok")))
    sleeps: list[float] = []
    server.gateway(sleeps=sleeps).chat(_chat())
    assert len(sleeps) == 2
    assert all(0 <= s <= 30 for s in sleeps)


def test_rate_limit_gives_up_after_max_retries():
    limited = httpx.Response(429, json={"error": {"message": "slow down"}})
    server = FakeServer(limited)
    gateway = server.gateway(max_retries=2)

    with pytest.raises(RateLimited):
        gateway.chat(_chat())
    assert len(server.requests) == 3


def test_auth_failure_is_not_retried():
    server = FakeServer(httpx.Response(401, json={"error": {"message": "bad key"}}))
    gateway = server.gateway()

    with pytest.raises(AuthFailure):
        gateway.chat(_chat())
    assert len(server.requests) == 1
    assert gateway.stats.retries == 0


def test_missing_choices_is_malformed():
    payload = _completion("x")
    payload["choices"] = []
    server = FakeServer(httpx.Response(200, json=payload))
    with pytest.raises(MalformedResponse):
        server.gateway().chat(_chat())


def test_embeddings_come_back_in_input_order():
    vectors = [[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]]
    server = FakeServer(httpx.Response(200, json=_embeddings(vectors, order=[2, 0, 1])))
    result = server.gateway().embed(EmbeddingRequest("embed", ("a", "b", "c")))
    assert result == vectors


def test_embedding_count_mismatch_is_malformed():
    server = FakeServer(httpx.Response(200, json=_embeddings([[1.0, 0.0]])))
    with pytest.raises(MalformedResponse):
        server.gateway().embed(EmbeddingRequest("embed", ("a", "b")))


def test_empty_embedding_input_is_rejected_before_any_call():
    with pytest.raises(InvalidRequest):
        EmbeddingRequest("embed", ())
    with pytest.raises(InvalidRequest):
        EmbeddingRequest("embed", ("ok", "  "))


def test_chat_request_validation():
    with pytest.raises(InvalidRequest):
        ChatRequest("judge", (ChatMessage(Role.SYSTEM, "only system"),))
    with pytest.raises(InvalidRequest):
        _chat(temperature=-0.1)


def test_cache_hit_makes_no_network_call(tmp_path):
    server = FakeServer(httpx.Response(200, json=_completion("cached answer")))
    cache = ResponseCache(tmp_path / "cache")

    first = server.gateway(cache=cache)
    assert first.chat(_chat()) == "cached answer"
    assert len(server.requests) == 1

    second = server.gateway(cache=ResponseCache(tmp_path / "cache"))
    exchange = second.chat_exchange(_chat())
    assert exchange.response == "cached answer"
    assert exchange.cached
    assert len(server.requests) == 1
    assert second.stats.network_calls == 0
    assert second.stats.cache_hits == 1


def test_failed_calls_are_not_cached(tmp_path):
    server = FakeServer(
        httpx.Response(401, json={"error": {"message": "bad key"}}),
        httpx.Response(200, json=_completion("fine")),
    )
    gateway = server.gateway(cache=ResponseCache(tmp_path))
    with pytest.raises(AuthFailure):
        gateway.chat(_chat())
    assert gateway.chat(_chat()) == "fine"


def test_requests_per_minute_spaces_live_calls():
    server = FakeServer(httpx.Response(200, json=_completion("ok")))
    now = [0.0]
    sleeps: list[float] = []

    def sleep(seconds: float):
        sleeps.append(seconds)
        now[0] += seconds

    backend_config = BackendConfig(base_url=BASE_URL, requests_per_minute=60)
    backend = OpenAIBackend(
        backend_config, "sk-test", http_client=httpx.Client(transport=httpx.MockTransport(server))
    )
    gateway = LlmGateway(backend, config=backend_config, sleep=sleep, clock=lambda: now[0])
    for i in range(3):
        gateway.chat(_chat(f"prompt {i}"))

    assert sleeps == [1.0, 1.0]


def test_concurrency_never_exceeds_bound():
    in_flight = 0
    high_water = 0
    lock = threading.Lock()

    def responder(request):
        nonlocal in_flight, high_water
        with lock:
            in_flight += 1
            high_water = max(high_water, in_flight)
        time.sleep(0.02)
        with lock:
            in_flight -= 1
        return "ok"

    gateway = LlmGateway(ScriptedBackend(responder=responder), config=BackendConfig(max_concurrency=2))
    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(lambda i: gateway.chat(_chat(f"prompt {i}")), range(16)))

    assert results == ["ok"] * 16
    assert 1 <= high_water <= 2


def test_scripted_backend_strict_mode():
    gateway = LlmGateway(ScriptedBackend(responses={}))
    with pytest.raises(ScriptedResponseMissing):
        gateway.chat(_chat())


def test_transcript_replays_exactly(tmp_path):
    transcript = tmp_path / "transcript.jsonl"
    server = FakeServer(
        httpx.Response(200, json=_completion("live answer")),
        httpx.Response(200, json=_embeddings([[0.1, 0.2], [0.3, 0.4]])),
    )
    live = server.gateway(recorder=TranscriptRecorder(transcript))
    chat_request = _chat()
    embed_request = EmbeddingRequest("embed", ("x", "y"))
    live.chat(chat_request)
    live.embed(embed_request)

    recorded = load_transcript(transcript)
    assert len(recorded) == 2

    replay = LlmGateway(ScriptedBackend.from_file(transcript, backend_id=live.backend_id))
    assert replay.chat(chat_request) == "live answer"
    assert replay.embed(embed_request) == [[0.1, 0.2], [0.3, 0.4]]


def test_cache_key_is_deterministic_and_sensitive():
    base = _chat("Is the sky blue?")
    assert cache_key(base, "b") == cache_key(_chat("Is the sky blue?"), "b")
    assert len(cache_key(base, "b")) == 32

    variants = [
        cache_key(base, "other-backend"),
        cache_key(ChatRequest.from_prompt("other-model", "Is the sky blue?"), "b"),
        cache_key(_chat("Is the sky blue?", temperature=0.7), "b"),
        cache_key(_chat("Is the sky blue?", seed_hint=1), "b"),
        cache_key(_chat("Is the sky blue? "), "b"),
        cache_key(EmbeddingRequest("judge", ("Is the sky blue?",)), "b"),
    ]
    assert len(set(variants) | {cache_key(base, "b")}) == len(variants) + 1


def test_cache_key_respects_message_order():
    a = ChatMessage(Role.SYSTEM, "Be terse.")
    b = ChatMessage(Role.USER, "Hello")
    c = ChatMessage(Role.USER, "Bye")
    assert cache_key(ChatRequest("judge", (a, b, c))) != cache_key(ChatRequest("judge", (a, c, b)))


def test_cache_lock_count_stays_bounded(tmp_path):
    cache = ResponseCache(tmp_path)
    digests = [hashlib.sha256(str(i).encode()).hexdigest() for i in range(5000)]

    locks = {id(cache.lock(d)) for d in digests}
    assert len(locks) <= LOCK_STRIPES
    assert cache.lock(digests[0]) is cache.lock(digests[0])
