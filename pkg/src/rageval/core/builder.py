"""
Builds WikiEval-style records from source documents: a question, three answers
of different quality and a diluted version of the context.
"""

import logging
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from difflib import SequenceMatcher
from pathlib import Path
from typing import Callable, Dict, List, Sequence

from rageval.core import prompts
from rageval.core.dataset import dump_record, missing_focused_sentences
from rageval.core.metrics import PromptRunner
from rageval.core.parser import parse_generated_question
from rageval.core.sentences import normalize_whitespace, split_sentences
from rageval.models.dataset import SCHEMA_ID, SourceDocument, WikiEvalRecord
from rageval.models.settings import MetricConfig
from rageval.services.llm_gateway import LlmGateway
from rageval.utils.exceptions import (
    ContainmentViolation,
    EmptyQuestion,
    GenerationFailed,
    RagEvalError,
)

logger = logging.getLogger(__name__)

MAX_QUESTION_ATTEMPTS = 3
FORBIDDEN_PHRASE = "provided context"
_URL = re.compile(r"https?://|www\.", re.IGNORECASE)

DUPLICATE_ANSWERS_FLAG = "grounded-equals-incomplete"

# a continuation opening this close to the intro is a restatement of it
RESTATEMENT_SIMILARITY = 0.6


def restates_intro(intro_text: str, continuation: str) -> bool:
    """
    True when the model's reply repeats the intro instead of only continuing
    it: some intro sentence appears verbatim, or the reply opens with a
    sentence close to the intro's first one.
    """
    intro = split_sentences(intro_text)
    reply = split_sentences(continuation)
    if not intro or not reply:
        return False
    normalized = normalize_whitespace(continuation)
    if any(sentence in normalized for sentence in intro):
        return True
    ratio = SequenceMatcher(None, intro[0].lower(), reply[0].lower()).ratio()
    return ratio >= RESTATEMENT_SIMILARITY


@dataclass(frozen=True)
class GeneratedAnswers:
    grounded: str
    ungrounded: str
    incomplete: str
    review_flags: tuple[str, ...] = ()


@dataclass
class BuildSummary:
    records: List[WikiEvalRecord] = field(default_factory=list)
    # document id -> error message
    failures: Dict[str, str] = field(default_factory=dict)


class DatasetBuilder:
    def __init__(self, gateway: LlmGateway, config: MetricConfig | None = None):
        self.config = config or MetricConfig()
        self.runner = PromptRunner(gateway, self.config)
        self.max_workers = gateway.config.max_concurrency

    def _generate(self, template: str, seed_hint: int | None = None, **bindings) -> str:
        prompt = prompts.get_template(template).render(bindings)
        return self.runner.ask(prompt, self.config.generation_temperature, seed_hint).strip()

    def build_question(self, doc: SourceDocument) -> str:
        """
        Asks for a question about the document's introduction. Questions
        mentioning the "provided context" or carrying a URL are rejected and
        asked again, up to MAX_QUESTION_ATTEMPTS times.
        """
        if not split_sentences(doc.intro_text):
            raise GenerationFailed(f"Document {doc.id}: intro text has no sentences.")

        for attempt in range(MAX_QUESTION_ATTEMPTS):
            raw = self._generate(prompts.DATASET_QUESTION, seed_hint=attempt, context=doc.intro_text)
            try:
                question = parse_generated_question(raw)
            except EmptyQuestion:
                logger.info("Document %s: empty question on attempt %d", doc.id, attempt + 1)
                continue
            if FORBIDDEN_PHRASE in question.lower() or _URL.search(question):
                logger.info("Document %s: rejected question %r", doc.id, question)
                continue
            return question

        raise GenerationFailed(
            f"Document {doc.id}: no acceptable question after {MAX_QUESTION_ATTEMPTS} attempts."
        )

    def build_answers(self, doc: SourceDocument, question: str) -> GeneratedAnswers:
        grounded = self._generate(
            prompts.DATASET_GROUNDED_ANSWER, question=question, context=doc.intro_text
        )
        ungrounded = self._generate(prompts.DATASET_UNGROUNDED_ANSWER, question=question)
        incomplete = self._generate(prompts.DATASET_INCOMPLETE_ANSWER, question=question)

        for kind, answer in (
            ("grounded", grounded),
            ("ungrounded", ungrounded),
            ("incomplete", incomplete),
        ):
            if not answer:
                raise GenerationFailed(f"Document {doc.id}: empty {kind} answer.")

        flags: tuple[str, ...] = ()
        if normalize_whitespace(grounded) == normalize_whitespace(incomplete):
            logger.warning("Document %s: grounded and incomplete answers are identical.", doc.id)
            flags = (DUPLICATE_ANSWERS_FLAG,)

        return GeneratedAnswers(grounded, ungrounded, incomplete, flags)

    def build_diluted_context(self, doc: SourceDocument) -> str:
        """
        Appends the pre-scraped extra_text when there is one, otherwise asks
        the model to continue the context. A reply that restates the intro is
        taken as the whole diluted context, so it must keep every intro
        sentence verbatim; otherwise ContainmentViolation is raised.
        """
        if doc.extra_text and doc.extra_text.strip():
            diluted = f"{doc.intro_text.rstrip()} {doc.extra_text.strip()}"
        else:
            continuation = self._generate(prompts.DATASET_CONTEXT_COMPLETION, context=doc.intro_text)
            if not continuation:
                raise GenerationFailed(f"Document {doc.id}: empty context continuation.")
            if restates_intro(doc.intro_text, continuation):
                logger.info("Document %s: continuation restates the intro.", doc.id)
                diluted = continuation
            else:
                diluted = f"{doc.intro_text.rstrip()} {continuation}"

        missing = missing_focused_sentences(doc.intro_text, diluted)
        if missing:
            raise ContainmentViolation(
                f"Document {doc.id}: diluted context lost {len(missing)} sentence(s), "
                f"first: {missing[0]!r}"
            )
        return diluted

    def build_record(self, doc: SourceDocument) -> WikiEvalRecord:
        question = self.build_question(doc)
        answers = self.build_answers(doc, question)
        diluted = self.build_diluted_context(doc)
        return WikiEvalRecord(
            schema_id=SCHEMA_ID,
            id=doc.id,
            source_id=doc.title or doc.id,
            question=question,
            grounded_answer=answers.grounded,
            ungrounded_answer=answers.ungrounded,
            incomplete_answer=answers.incomplete,
            focused_context=doc.intro_text,
            diluted_context=diluted,
            review_flags=list(answers.review_flags),
        )

    def build_dataset(
        self,
        docs: Sequence[SourceDocument],
        out_path: Path,
        on_progress: Callable[[], None] | None = None,
    ) -> BuildSummary:
        """
        Builds records in parallel and appends them to out_path in document
        order. A failing document is reported in the summary and skipped.
        """
        out_path = Path(out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text("", encoding="utf-8")
        write_lock = threading.Lock()
        summary = BuildSummary()

        def build(doc: SourceDocument) -> WikiEvalRecord | RagEvalError:
            try:
                return self.build_record(doc)
            except RagEvalError as error:
                logger.warning("Document %s failed: %s", doc.id, error)
                return error
            finally:
                if on_progress:
                    on_progress()

        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            for doc, result in zip(docs, pool.map(build, docs)):
                if isinstance(result, RagEvalError):
                    summary.failures[doc.id] = f"{type(result).__name__}: {result}"
                    continue
                with write_lock, open(out_path, "a", encoding="utf-8") as f:
                    f.write(dump_record(result) + "\n")
                summary.records.append(result)

        return summary
