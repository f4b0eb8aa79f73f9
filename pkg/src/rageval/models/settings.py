from dataclasses import dataclass, field
from pathlib import Path

from rageval.models.llm import BackendConfig
from rageval.utils.enumerators import Method, ReportFormat, SentenceSplitter
from rageval.utils.exceptions import ConfigurationError

DEFAULT_JUDGE_MODEL = "gpt-3.5-turbo-16k"
DEFAULT_EMBED_MODEL = "text-embedding-ada-002"


@dataclass(frozen=True)
class MetricConfig:
    n_questions: int = 3
    embed_model_id: str = DEFAULT_EMBED_MODEL
    judge_model_id: str = DEFAULT_JUDGE_MODEL
    sentence_splitter: SentenceSplitter = SentenceSplitter.RULE_BASED
    rng_seed: int = 0
    # verification, extraction and scoring prompts
    judge_temperature: float = 0.0
    # question generation and dataset construction
    generation_temperature: float = 0.7

    def __post_init__(self):
        if self.n_questions < 1:
            raise ConfigurationError("n_questions must be at least 1.")
        try:
            # manifests carry the plain value
            object.__setattr__(self, "sentence_splitter", SentenceSplitter(self.sentence_splitter))
        except ValueError:
            raise ConfigurationError(f"Unknown sentence splitter '{self.sentence_splitter}'.")
        if self.judge_temperature < 0 or self.generation_temperature < 0:
            raise ConfigurationError("Temperatures cannot be negative.")

    def to_dict(self) -> dict:
        return {
            "n_questions": self.n_questions,
            "embed_model_id": self.embed_model_id,
            "judge_model_id": self.judge_model_id,
            "sentence_splitter": self.sentence_splitter.value,
            "rng_seed": self.rng_seed,
            "judge_temperature": self.judge_temperature,
            "generation_temperature": self.generation_temperature,
        }


@dataclass(frozen=True)
class RunSettings:
    methods: tuple[Method, ...] = (Method.RAGAS, Method.GPT_SCORE, Method.GPT_RANKING)
    formats: tuple[ReportFormat, ...] = (
        ReportFormat.JSON,
        ReportFormat.CSV,
        ReportFormat.MARKDOWN,
    )
    failure_threshold: float = 0.10
    out_dir: Path = field(default_factory=lambda: Path("rageval-out"))

    def __post_init__(self):
        if not self.methods:
            raise ConfigurationError("At least one method is required.")
        if not 0.0 <= self.failure_threshold <= 1.0:
            raise ConfigurationError("failure_threshold must lie in [0, 1].")


@dataclass(frozen=True)
class Settings:
    backend: BackendConfig
    metrics: MetricConfig
    run: RunSettings
