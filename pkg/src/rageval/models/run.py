from dataclasses import dataclass, field
from typing import Any, Union

from rageval.models.records import (
    AgreementTable,
    AnswerRelevanceResult,
    ContextRelevanceResult,
    FaithfulnessResult,
)
from rageval.utils.enumerators import Dimension, LabelSource, Method, Preference


@dataclass(frozen=True)
class MetricFailure:
    """Explicit failure object standing in for a metric that could not be computed."""

    metric: str
    error_type: str
    message: str

    @classmethod
    def from_error(cls, metric: str, error: Exception) -> "MetricFailure":
        return cls(metric=metric, error_type=type(error).__name__, message=str(error))


FaithfulnessOutcome = Union[FaithfulnessResult, MetricFailure]
AnswerRelevanceOutcome = Union[AnswerRelevanceResult, MetricFailure]
ContextRelevanceOutcome = Union[ContextRelevanceResult, MetricFailure]


@dataclass(frozen=True)
class MetricReport:
    record_id: str
    faithfulness: FaithfulnessOutcome
    answer_relevance: AnswerRelevanceOutcome
    context_relevance: ContextRelevanceOutcome
    transcripts: tuple[str, ...] = ()

    @property
    def failures(self) -> list[MetricFailure]:
        outcomes = (self.faithfulness, self.answer_relevance, self.context_relevance)
        return [o for o in outcomes if isinstance(o, MetricFailure)]

    @property
    def failed(self) -> bool:
        return bool(self.failures)


@dataclass(frozen=True)
class InstanceOutcome:
    instance_id: str
    dimension: Dimension
    method: Method
    human: Preference
    label_source: LabelSource
    predicted: Preference | None = None
    unevaluable_reason: str | None = None
    # per-candidate scores or the raw ranking, for audit
    detail: dict[str, Any] = field(default_factory=dict)

    @property
    def evaluable(self) -> bool:
        return self.predicted is not None

    @property
    def agreed(self) -> bool | None:
        if self.predicted is None:
            return None
        return self.predicted is self.human

    def to_dict(self) -> dict[str, Any]:
        return {
            "instance_id": self.instance_id,
            "dimension": self.dimension.value,
            "method": self.method.value,
            "human": self.human.value,
            "label_source": self.label_source.value,
            "predicted": self.predicted.value if self.predicted else None,
            "agreed": self.agreed,
            "unevaluable_reason": self.unevaluable_reason,
            "detail": self.detail,
        }


@dataclass
class RunManifest:
    """Everything needed to re-run a scripted run and reproduce its outputs."""

    command: str
    dataset_path: str
    dataset_digest: str
    backend_id: str
    backend_config_digest: str
    metric_config: dict[str, Any]
    methods: list[str]
    rng_seed: int
    started_at: str = ""
    finished_at: str = ""
    transcript: str = "transcript.jsonl"
    token_usage: dict[str, int] = field(default_factory=dict)
    instance_log: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "dataset_path": self.dataset_path,
            "dataset_digest": self.dataset_digest,
            "backend_id": self.backend_id,
            "backend_config_digest": self.backend_config_digest,
            "metric_config": self.metric_config,
            "methods": self.methods,
            "rng_seed": self.rng_seed,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "transcript": self.transcript,
            "token_usage": self.token_usage,
            "instance_log": self.instance_log,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunManifest":
        return cls(
            command=data["command"],
            dataset_path=data["dataset_path"],
            dataset_digest=data["dataset_digest"],
            backend_id=data["backend_id"],
            backend_config_digest=data.get("backend_config_digest", ""),
            metric_config=dict(data["metric_config"]),
            methods=list(data.get("methods", [])),
            rng_seed=int(data.get("rng_seed", 0)),
            started_at=data.get("started_at", ""),
            finished_at=data.get("finished_at", ""),
            transcript=data.get("transcript", "transcript.jsonl"),
            token_usage=dict(data.get("token_usage", {})),
            instance_log=list(data.get("instance_log", [])),
        )


@dataclass
class ReportBundle:
    manifest: RunManifest
    table: AgreementTable | None = None
    reports: list[MetricReport] = field(default_factory=list)
    instance_log: list[InstanceOutcome] = field(default_factory=list)

    @property
    def failure_summary(self) -> dict[str, int]:
        summary: dict[str, int] = {}
        for report in self.reports:
            for failure in report.failures:
                key = f"{failure.metric}:{failure.error_type}"
                summary[key] = summary.get(key, 0) + 1
        for outcome in self.instance_log:
            if not outcome.evaluable:
                key = f"{outcome.method.value}:{outcome.dimension.value}:unevaluable"
                summary[key] = summary.get(key, 0) + 1
        return dict(sorted(summary.items()))

    @property
    def failure_rate(self) -> float:
        """Fraction of failed records (score runs) or unevaluable instances (agree runs)."""
        if self.instance_log:
            failed = sum(1 for o in self.instance_log if not o.evaluable)
            return failed / len(self.instance_log)
        if self.reports:
            return sum(1 for r in self.reports if r.failed) / len(self.reports)
        return 0.0
