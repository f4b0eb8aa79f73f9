import hashlib
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

from rageval.utils.enumerators import Role
from rageval.utils.exceptions import ConfigurationError, InvalidRequest

DEFAULT_BASE_URL = "https://api.openai.com/v1"
DEFAULT_API_KEY_ENV = "OPENAI_API_KEY"


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    max_tokens: int | None = None
    seed_hint: int | None = None

    def __post_init__(self):
        if not self.model_id:
            raise InvalidRequest("A chat request needs a model id.")
        if not any(m.role is Role.USER for m in self.messages):
            raise InvalidRequest("A chat request needs at least one user message.")
        if not math.isfinite(self.temperature) or self.temperature < 0:
            raise InvalidRequest(f"Invalid temperature {self.temperature}.")
        if self.max_tokens is not None and self.max_tokens < 1:
            raise InvalidRequest("max_tokens must be positive when set.")

    @classmethod
    def from_prompt(
        cls,
        model_id: str,
        prompt: str,
        temperature: float = 0.0,
        seed_hint: int | None = None,
        max_tokens: int | None = None,
    ) -> "ChatRequest":
        return cls(
            model_id=model_id,
            messages=(ChatMessage(Role.USER, prompt),),
            temperature=temperature,
            max_tokens=max_tokens,
            seed_hint=seed_hint,
        )

    @property
    def prompt(self) -> str:
        """Content of the last user message."""
        return [m.content for m in self.messages if m.role is Role.USER][-1]

    def body(self) -> dict[str, Any]:
        return {
            "kind": "chat",
            "model": self.model_id,
            "messages": [[m.role.value, m.content] for m in self.messages],
            "temperature": float(self.temperature),
            "max_tokens": self.max_tokens,
            "seed": self.seed_hint,
        }


@dataclass(frozen=True)
class EmbeddingRequest:
    model_id: str
    inputs: tuple[str, ...]

    def __post_init__(self):
        if not self.model_id:
            raise InvalidRequest("An embedding request needs a model id.")
        if not self.inputs:
            raise InvalidRequest("An embedding request needs at least one input.")
        for text in self.inputs:
            if not isinstance(text, str) or not text.strip():
                raise InvalidRequest("Embedding inputs must be non-empty text.")

    def body(self) -> dict[str, Any]:
        return {"kind": "embed", "model": self.model_id, "inputs": list(self.inputs)}


def cache_key(request: ChatRequest | EmbeddingRequest, backend_id: str = "") -> bytes:
    """
    Stable digest of (backend, model, request body).

    Every semantic field takes part, message order included; the canonical JSON
    encoding keeps the key identical across processes and platforms.
    """
    canonical = json.dumps(
        {"backend": backend_id, **request.body()},
        sort_keys=True,
        ensure_ascii=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).digest()


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int = 0
    completion_tokens: int = 0


@dataclass(frozen=True)
class LlmExchange:
    digest: bytes
    kind: str
    backend_id: str
    model_id: str
    response: Any
    latency_s: float
    usage: TokenUsage | None = None
    cached: bool = False

    @property
    def hexdigest(self) -> str:
        return self.digest.hex()


@dataclass(frozen=True)
class BackendConfig:
    base_url: str = DEFAULT_BASE_URL
    api_key_env: str = DEFAULT_API_KEY_ENV
    timeout_s: float = 60.0
    # retries after the first attempt
    max_retries: int = 4
    max_concurrency: int = 4
    requests_per_minute: int | None = None
    cache_dir: Path | None = None
    cache_enabled: bool = True

    def __post_init__(self):
        if self.max_concurrency < 1:
            raise ConfigurationError("max_concurrency must be at least 1.")
        if self.max_retries < 0:
            raise ConfigurationError("max_retries cannot be negative.")
        if self.timeout_s <= 0:
            raise ConfigurationError("timeout must be positive.")
        if self.requests_per_minute is not None and self.requests_per_minute < 1:
            raise ConfigurationError("requests_per_minute must be positive when set.")

    def digest(self) -> str:
        fields = asdict(self)
        fields["cache_dir"] = str(self.cache_dir) if self.cache_dir else None
        canonical = json.dumps(fields, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
