import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping, Protocol

import httpx
import openai
from tenacity import (
    RetryCallState,
    Retrying,
    retry_if_exception_type,
    stop_after_attempt,
    wait_random_exponential,
)

from rageval.config import read_stored_api_key
from rageval.models.llm import (
    BackendConfig,
    ChatRequest,
    EmbeddingRequest,
    LlmExchange,
    TokenUsage,
    cache_key,
)
from rageval.services.response_cache import ResponseCache, TranscriptRecorder, load_transcript
from rageval.utils.exceptions import (
    AuthFailure,
    BackendUnavailable,
    ConfigurationError,
    DimensionMismatch,
    LlmGatewayError,
    LlmTimeout,
    MalformedResponse,
    RateLimited,
    ScriptedResponseMissing,
)

logger = logging.getLogger(__name__)

RETRYABLE = (RateLimited, LlmTimeout, BackendUnavailable)
MAX_RETRY_AFTER_S = 120.0


@dataclass(frozen=True)
class BackendReply:
    payload: Any
    usage: TokenUsage | None = None


class Backend(Protocol):
    backend_id: str
    live: bool

    def complete(self, request: ChatRequest, hexdigest: str) -> BackendReply: ...

    def embed(self, request: EmbeddingRequest, hexdigest: str) -> BackendReply: ...


def _retry_after(response: httpx.Response | None) -> float | None:
    if response is None:
        return None
    headers = response.headers
    try:
        if "retry-after-ms" in headers:
            return float(headers["retry-after-ms"]) / 1000.0
        if "retry-after" in headers:
            return float(headers["retry-after"])
    except ValueError:
        return None
    return None


class OpenAIBackend:
    """
    Live backend speaking the OpenAI-compatible chat/embeddings JSON protocol.

    The SDK's own retries are disabled; retrying is done by the gateway so that
    backoff and retry-after handling are uniform across backends.
    """

    live = True

    def __init__(
        self,
        config: BackendConfig,
        api_key: str,
        http_client: httpx.Client | None = None,
    ):
        self.backend_id = f"openai-compatible:{config.base_url.rstrip('/')}"
        self.client = openai.OpenAI(
            api_key=api_key,
            base_url=config.base_url,
            timeout=config.timeout_s,
            max_retries=0,
            http_client=http_client,
        )

    def _translate(self, call: Callable[[], Any]) -> Any:
        try:
            return call()
        except openai.APITimeoutError as error:
            raise LlmTimeout(str(error)) from error
        except openai.RateLimitError as error:
            raise RateLimited(str(error), retry_after=_retry_after(error.response)) from error
        except (openai.AuthenticationError, openai.PermissionDeniedError) as error:
            raise AuthFailure(str(error)) from error
        except (openai.InternalServerError, openai.APIConnectionError) as error:
            raise BackendUnavailable(str(error)) from error
        except openai.APIResponseValidationError as error:
            raise MalformedResponse(str(error)) from error
        except openai.APIStatusError as error:
            raise LlmGatewayError(f"HTTP {error.status_code}: {error.message}") from error
        except ValueError as error:
            # undecodable response body
            raise MalformedResponse(str(error)) from error

    def complete(self, request: ChatRequest, hexdigest: str) -> BackendReply:
        optional: dict[str, Any] = {}
        if request.max_tokens is not None:
            optional["max_tokens"] = request.max_tokens
        if request.seed_hint is not None:
            optional["seed"] = request.seed_hint

        response = self._translate(
            lambda: self.client.chat.completions.create(
                model=request.model_id,
                messages=[
                    {"role": m.role.value, "content": m.content} for m in request.messages
                ],
                temperature=request.temperature,
                **optional,
            )
        )

        if not getattr(response, "choices", None):
            raise MalformedResponse("Chat response carried no choices.")
        content = response.choices[0].message.content
        if not isinstance(content, str):
            raise MalformedResponse("Chat response carried no message content.")

        usage = None
        if getattr(response, "usage", None) is not None:
            usage = TokenUsage(
                prompt_tokens=response.usage.prompt_tokens or 0,
                completion_tokens=response.usage.completion_tokens or 0,
            )
        return BackendReply(payload=content, usage=usage)

    def embed(self, request: EmbeddingRequest, hexdigest: str) -> BackendReply:
        response = self._translate(
            lambda: self.client.embeddings.create(
                model=request.model_id,
                input=list(request.inputs),
                encoding_format="float",
            )
        )

        data = sorted(getattr(response, "data", None) or [], key=lambda item: item.index)
        vectors = [[float(x) for x in item.embedding] for item in data]

        usage = None
        if getattr(response, "usage", None) is not None:
            usage = TokenUsage(prompt_tokens=response.usage.prompt_tokens or 0)
        return BackendReply(payload=vectors, usage=usage)


class ScriptedBackend:
    """
    Deterministic stand-in for the API.

    Responses are looked up by request digest; a responder callable, if given,
    answers anything the mapping does not cover.
    """

    live = False

    def __init__(
        self,
        responses: Mapping[str, Any] | None = None,
        responder: Callable[[ChatRequest | EmbeddingRequest], Any] | None = None,
        backend_id: str = "scripted",
    ):
        self.backend_id = backend_id
        self.responses = dict(responses or {})
        self.responder = responder
        self.calls = 0
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: Path, backend_id: str = "scripted") -> "ScriptedBackend":
        return cls(responses=load_transcript(Path(path)), backend_id=backend_id)

    def _lookup(self, request, hexdigest: str) -> Any:
        with self._lock:
            self.calls += 1
        if hexdigest in self.responses:
            return self.responses[hexdigest]
        if self.responder is not None:
            return self.responder(request)
        raise ScriptedResponseMissing(f"No scripted response for request {hexdigest}.")

    def complete(self, request: ChatRequest, hexdigest: str) -> BackendReply:
        return BackendReply(payload=str(self._lookup(request, hexdigest)))

    def embed(self, request: EmbeddingRequest, hexdigest: str) -> BackendReply:
        vectors = self._lookup(request, hexdigest)
        return BackendReply(payload=[[float(x) for x in vector] for vector in vectors])


@dataclass
class GatewayStats:
    network_calls: int = 0
    cache_hits: int = 0
    retries: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0


class LlmGateway:
    """
    Uniform chat/embedding access: cache first, then the backend with bounded
    concurrency, optional request-rate limiting and retry with backoff.

    Safe to share across threads.
    """

    def __init__(
        self,
        backend: Backend,
        config: BackendConfig | None = None,
        cache: ResponseCache | None = None,
        recorder: TranscriptRecorder | None = None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.backend = backend
        self.config = config or BackendConfig()
        self.cache = cache
        self.recorder = recorder
        self.stats = GatewayStats()

        self._sleep = sleep
        self._clock = clock
        self._semaphore = threading.BoundedSemaphore(self.config.max_concurrency)
        self._stats_lock = threading.Lock()
        self._rate_lock = threading.Lock()
        self._next_slot = 0.0
        self._backoff = wait_random_exponential(multiplier=0.5, max=30)

    @property
    def backend_id(self) -> str:
        return self.backend.backend_id

    def cache_key(self, request: ChatRequest | EmbeddingRequest) -> bytes:
        return cache_key(request, self.backend_id)

    def chat(self, request: ChatRequest) -> str:
        return self.chat_exchange(request).response

    def embed(self, request: EmbeddingRequest) -> list[list[float]]:
        return self.embed_exchange(request).response

    def chat_exchange(self, request: ChatRequest) -> LlmExchange:
        return self._exchange(request, "chat", self.backend.complete)

    def embed_exchange(self, request: EmbeddingRequest) -> LlmExchange:
        def validate(vectors):
            if len(vectors) != len(request.inputs):
                raise MalformedResponse(
                    f"Expected {len(request.inputs)} embeddings, got {len(vectors)}."
                )
            if len({len(vector) for vector in vectors}) != 1 or not vectors[0]:
                raise DimensionMismatch("Embeddings in one batch have different dimensions.")

        return self._exchange(request, "embed", self.backend.embed, validate)

    def _exchange(self, request, kind: str, call, validate=None) -> LlmExchange:
        digest = self.cache_key(request)
        hexdigest = digest.hex()

        if self.cache is None:
            return self._fetch(request, kind, call, digest, validate)

        with self.cache.lock(hexdigest):
            cached = self.cache.load(hexdigest)
            if cached is not None and cached.get("kind") == kind:
                with self._stats_lock:
                    self.stats.cache_hits += 1
                logger.debug("Cache hit for %s request %s", kind, hexdigest[:12])
                self._record(hexdigest, kind, cached["response"])
                return LlmExchange(
                    digest=digest,
                    kind=kind,
                    backend_id=self.backend_id,
                    model_id=request.model_id,
                    response=cached["response"],
                    latency_s=0.0,
                    cached=True,
                )

            exchange = self._fetch(request, kind, call, digest, validate)
            self.cache.store(hexdigest, {"kind": kind, "response": exchange.response})
            return exchange

    def _fetch(self, request, kind: str, call, digest: bytes, validate=None) -> LlmExchange:
        hexdigest = digest.hex()
        started = self._clock()
        reply: BackendReply = self._with_retries(lambda: self._guarded(call, request, hexdigest))
        latency = self._clock() - started

        with self._stats_lock:
            self.stats.network_calls += 1
            if reply.usage is not None:
                self.stats.prompt_tokens += reply.usage.prompt_tokens
                self.stats.completion_tokens += reply.usage.completion_tokens

        if validate is not None:
            validate(reply.payload)

        self._record(hexdigest, kind, reply.payload)
        return LlmExchange(
            digest=digest,
            kind=kind,
            backend_id=self.backend_id,
            model_id=request.model_id,
            response=reply.payload,
            latency_s=latency,
            usage=reply.usage,
        )

    def _record(self, hexdigest: str, kind: str, payload: Any):
        if self.recorder is not None:
            self.recorder.record(hexdigest, kind, payload)

    def _guarded(self, call, request, hexdigest: str) -> BackendReply:
        with self._semaphore:
            self._throttle()
            return call(request, hexdigest)

    def _throttle(self):
        rpm = self.config.requests_per_minute
        if not rpm or not self.backend.live:
            return
        interval = 60.0 / rpm
        with self._rate_lock:
            now = self._clock()
            wait = self._next_slot - now
            if wait > 0:
                self._sleep(wait)
                now = self._clock()
            self._next_slot = max(now, self._next_slot) + interval

    def _wait(self, retry_state: RetryCallState) -> float:
        error = retry_state.outcome.exception() if retry_state.outcome else None
        if isinstance(error, RateLimited) and error.retry_after is not None:
            return min(error.retry_after, MAX_RETRY_AFTER_S)
        return self._backoff(retry_state)

    def _before_sleep(self, retry_state: RetryCallState):
        with self._stats_lock:
            self.stats.retries += 1
        error = retry_state.outcome.exception() if retry_state.outcome else None
        logger.warning(
            "Attempt %d failed (%s); retrying in %.2fs",
            retry_state.attempt_number,
            type(error).__name__,
            retry_state.next_action.sleep if retry_state.next_action else 0.0,
        )

    def _with_retries(self, fn: Callable[[], BackendReply]) -> BackendReply:
        if not self.backend.live:
            return fn()
        retrying = Retrying(
            stop=stop_after_attempt(self.config.max_retries + 1),
            wait=self._wait,
            retry=retry_if_exception_type(RETRYABLE),
            sleep=self._sleep,
            before_sleep=self._before_sleep,
            reraise=True,
        )
        return retrying(fn)


def resolve_api_key(config: BackendConfig) -> str | None:
    return os.environ.get(config.api_key_env) or read_stored_api_key(config.api_key_env)


def create_gateway(
    config: BackendConfig,
    scripted_transcript: Path | None = None,
    scripted_backend_id: str = "scripted",
    record_to: Path | None = None,
    api_key: str | None = None,
    http_client: httpx.Client | None = None,
) -> LlmGateway:
    """Builds a gateway from configuration: scripted when a transcript is given, live otherwise."""
    if scripted_transcript is not None:
        backend: Backend = ScriptedBackend.from_file(
            scripted_transcript, backend_id=scripted_backend_id
        )
    else:
        api_key = api_key or resolve_api_key(config)
        if not api_key:
            raise ConfigurationError(
                f"No API key found. Set {config.api_key_env} or run `rageval config`."
            )
        backend = OpenAIBackend(config, api_key, http_client=http_client)

    cache = None
    if config.cache_enabled and config.cache_dir is not None and scripted_transcript is None:
        cache = ResponseCache(config.cache_dir)

    recorder = TranscriptRecorder(record_to) if record_to is not None else None
    return LlmGateway(backend, config=config, cache=cache, recorder=recorder)
