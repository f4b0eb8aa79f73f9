from __future__ import annotations

from typing import Any, Callable

import pytest

from rageval.models.llm import BackendConfig, ChatRequest, EmbeddingRequest
from rageval.models.settings import MetricConfig
from rageval.services.llm_gateway import LlmGateway, ScriptedBackend
from rageval.utils.exceptions import ScriptedResponseMissing

# Markers that identify each pipeline prompt by its instruction text.
EXTRACT_STATEMENTS = "create one or more statements"
VERIFY_STATEMENTS = "determine whether they are supported"
GENERATE_QUESTION = "Generate a question for the given answer"
EXTRACT_SENTENCES = "extract relevant sentences"
SCORE_PROMPT = "assign a score"
RANK_PROMPT = "rank each"


class PromptRouter:
    """
    Responder for ScriptedBackend.

    A chat prompt is answered by the first rule whose markers all occur in it.
    A rule's response is a string, a list of strings handed out in turn, or a
    callable taking the request. Embedding inputs are looked up in `vectors`.
    """

    def __init__(self):
        self.rules: list[tuple[tuple[str, ...], Any]] = []
        self.vectors: dict[str, list[float]] = {}
        self.default_vector = [1.0, 0.0, 0.0]
        self.prompts: list[str] = []
        self.embed_batches: list[tuple[str, ...]] = []

    def on(self, *markers: str, response: Any) -> "PromptRouter":
        if isinstance(response, list):
            response = iter(response)
        self.rules.append((markers, response))
        return self

    def __call__(self, request: ChatRequest | EmbeddingRequest) -> Any:
        if isinstance(request, EmbeddingRequest):
            self.embed_batches.append(request.inputs)
            return [self.vectors.get(text, self.default_vector) for text in request.inputs]

        prompt = request.prompt
        self.prompts.append(prompt)
        for markers, response in self.rules:
            if all(marker in prompt for marker in markers):
                if callable(response):
                    return response(request)
                if hasattr(response, "__next__"):
                    return next(response)
                return response
        raise ScriptedResponseMissing(f"No rule for prompt {prompt[:60]!r}")


@pytest.fixture
def router() -> PromptRouter:
    return PromptRouter()


@pytest.fixture
def make_gateway() -> Callable[..., LlmGateway]:
    def build(responder: Callable | None = None, responses: dict | None = None, **config) -> LlmGateway:
        backend = ScriptedBackend(responses=responses, responder=responder)
        return LlmGateway(backend, config=BackendConfig(**config))

    return build


@pytest.fixture
def metric_config() -> MetricConfig:
    return MetricConfig(n_questions=3, rng_seed=7)
