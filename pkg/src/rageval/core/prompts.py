"""
Prompt templates.

Templates are plain-text resources under `rageval/prompts/`. Slots are written as
`[name]`, the way the prompts are quoted in the literature, e.g. `[question]` or
`[answer 1]`. A slot bound to a list repeats its whole line once per element,
which is how the verification prompt lists `statement: [statement i]`.

Judging templates also ship a one-example demonstration under
`rageval/prompts/demonstrations/`. It is inserted between the instruction and
the first slot line so the rendered prompt still opens with the instruction.
"""

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping, Sequence, Union

from rageval.utils.exceptions import MissingBinding, TemplateNotFound, UnknownPlaceholder

Binding = Union[str, Sequence[str]]

STATEMENT_EXTRACTION = "statement_extraction"
STATEMENT_VERIFICATION = "statement_verification"
QUESTION_GENERATION = "question_generation"
CONTEXT_EXTRACTION = "context_extraction"

GPT_SCORE_FAITHFULNESS = "gpt_score_faithfulness"
GPT_SCORE_ANSWER_RELEVANCE = "gpt_score_answer_relevance"
GPT_SCORE_CONTEXT_RELEVANCE = "gpt_score_context_relevance"
GPT_RANK_FAITHFULNESS = "gpt_rank_faithfulness"
GPT_RANK_ANSWER_RELEVANCE = "gpt_rank_answer_relevance"
GPT_RANK_CONTEXT_RELEVANCE = "gpt_rank_context_relevance"

DATASET_QUESTION = "dataset_question"
DATASET_GROUNDED_ANSWER = "dataset_grounded_answer"
DATASET_UNGROUNDED_ANSWER = "dataset_ungrounded_answer"
DATASET_INCOMPLETE_ANSWER = "dataset_incomplete_answer"
DATASET_CONTEXT_COMPLETION = "dataset_context_completion"

ALL_TEMPLATES = (
    STATEMENT_EXTRACTION,
    STATEMENT_VERIFICATION,
    QUESTION_GENERATION,
    CONTEXT_EXTRACTION,
    GPT_SCORE_FAITHFULNESS,
    GPT_SCORE_ANSWER_RELEVANCE,
    GPT_SCORE_CONTEXT_RELEVANCE,
    GPT_RANK_FAITHFULNESS,
    GPT_RANK_ANSWER_RELEVANCE,
    GPT_RANK_CONTEXT_RELEVANCE,
    DATASET_QUESTION,
    DATASET_GROUNDED_ANSWER,
    DATASET_UNGROUNDED_ANSWER,
    DATASET_INCOMPLETE_ANSWER,
    DATASET_CONTEXT_COMPLETION,
)

_PLACEHOLDER = re.compile(r"\[([a-z][a-z0-9_]*(?: [a-z0-9_]+)*)\]")


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str
    demonstration: str | None = None

    @property
    def placeholders(self) -> tuple[str, ...]:
        seen: list[str] = []
        for match in _PLACEHOLDER.finditer(self.body):
            if match.group(1) not in seen:
                seen.append(match.group(1))
        return tuple(seen)

    def render(self, bindings: Mapping[str, Binding]) -> str:
        """Substitutes every slot. Bound values are never re-scanned for slots."""
        placeholders = self.placeholders

        unknown = [key for key in bindings if key not in placeholders]
        if unknown:
            raise UnknownPlaceholder(
                f"Template '{self.name}' has no slot named {', '.join(sorted(unknown))}."
            )
        missing = [key for key in placeholders if key not in bindings]
        if missing:
            raise MissingBinding(
                f"Template '{self.name}' needs a value for {', '.join(missing)}."
            )

        rendered: list[str] = []
        demonstration_pending = self.demonstration is not None
        for line in self.body.split("\n"):
            names = _PLACEHOLDER.findall(line)
            if names and demonstration_pending:
                rendered.extend(self.demonstration.split("\n"))
                demonstration_pending = False
            rendered.extend(self._render_line(line, names, bindings))

        if demonstration_pending:
            rendered.extend(self.demonstration.split("\n"))
        return "\n".join(rendered)

    def _render_line(
        self, line: str, names: list[str], bindings: Mapping[str, Binding]
    ) -> list[str]:
        repeated = {n: bindings[n] for n in names if not isinstance(bindings[n], str)}
        if not repeated:
            return [_PLACEHOLDER.sub(lambda m: bindings[m.group(1)], line)]

        lengths = {len(values) for values in repeated.values()}
        if len(lengths) != 1 or 0 in lengths:
            raise MissingBinding(
                f"Template '{self.name}': list slots on one line need equal, non-empty lists."
            )

        lines = []
        for i in range(lengths.pop()):

            def substitute(match, i=i):
                value = bindings[match.group(1)]
                return value if isinstance(value, str) else value[i]

            lines.append(_PLACEHOLDER.sub(substitute, line))
        return lines


def render(template: PromptTemplate, bindings: Mapping[str, Binding]) -> str:
    return template.render(bindings)


def _read_resource(*parts: str) -> str | None:
    resource = resources.files("rageval") / "prompts"
    for part in parts:
        resource = resource / part
    if not resource.is_file():
        return None
    return resource.read_text(encoding="utf-8").rstrip("\n")


@lru_cache(maxsize=None)
def get_template(name: str) -> PromptTemplate:
    """Loads a template and its demonstration (if any) from the package resources."""
    body = _read_resource(f"{name}.txt")
    if body is None:
        raise TemplateNotFound(f"Prompt template not found: {name}")
    demonstration = _read_resource("demonstrations", f"{name}.txt")
    return PromptTemplate(name=name, body=body, demonstration=demonstration)
