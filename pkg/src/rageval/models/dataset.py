"""
Line schemas for the JSONL files the toolkit reads and writes.

A WikiEval file holds one `WikiEvalRecord` per line. The first-party layout
carries `"schema": "rageval.wikieval/1"`; files in the published WikiEval
layout (answer, poor_answer, context_v1, context_v2, source) are accepted
under those names too.
"""

from datetime import datetime
from typing import Annotated, Any, Literal

from pydantic import AfterValidator, AliasChoices, BaseModel, BeforeValidator, ConfigDict, Field

SCHEMA_ID = "rageval.wikieval/1"


def _non_blank(value: str) -> str:
    if not value.strip():
        raise ValueError("must not be empty")
    return value


def _join_passages(value: Any) -> Any:
    # published contexts are lists of passages
    if isinstance(value, list) and all(isinstance(v, str) for v in value):
        return " ".join(v.strip() for v in value)
    return value


Text = Annotated[str, AfterValidator(_non_blank)]
ContextText = Annotated[str, BeforeValidator(_join_passages), AfterValidator(_non_blank)]
Label = Literal["A", "B"]


class PreferenceLabels(BaseModel):
    """Human preference per dimension; A is always the constructed high side."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    faithfulness: Label | None = None
    answer_relevance: Label | None = None
    context_relevance: Label | None = None


class WikiEvalRecord(BaseModel):
    model_config = ConfigDict(extra="ignore", frozen=True, populate_by_name=True)

    schema_id: str | None = Field(
        default=None,
        validation_alias=AliasChoices("schema", "schema_id"),
        serialization_alias="schema",
    )
    id: str | None = None
    source_id: str | None = Field(default=None, validation_alias=AliasChoices("source_id", "source"))
    question: Text
    grounded_answer: Text = Field(validation_alias=AliasChoices("grounded_answer", "answer"))
    ungrounded_answer: Text
    incomplete_answer: Text = Field(validation_alias=AliasChoices("incomplete_answer", "poor_answer"))
    focused_context: ContextText = Field(
        validation_alias=AliasChoices("focused_context", "context_v1")
    )
    diluted_context: ContextText = Field(
        validation_alias=AliasChoices("diluted_context", "context_v2")
    )
    labels: PreferenceLabels | None = None
    review_flags: list[str] = Field(default_factory=list)


class TripleLine(BaseModel):
    """One question/context/answer triple for the `score` command."""

    model_config = ConfigDict(extra="ignore", frozen=True)

    id: str | None = None
    question: Text
    context: ContextText = Field(validation_alias=AliasChoices("context", "contexts"))
    answer: Text
    metadata: dict[str, Any] = Field(default_factory=dict)


class SourceDocument(BaseModel):
    """A source page supplied to `build`; extra_text holds pre-scraped related material."""

    model_config = ConfigDict(extra="ignore", frozen=True)

    id: str
    title: str = ""
    intro_text: Text
    extra_text: str | None = None
    fetched_at: datetime | None = None
