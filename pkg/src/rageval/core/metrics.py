"""
Reference-free metric pipelines: faithfulness, answer relevance and context
relevance, each computed by prompting the judge model through the gateway.
"""

import logging
from collections import Counter
from typing import Callable, List, TypeVar

from rageval.core import prompts
from rageval.core.parser import (
    parse_extracted_sentences,
    parse_generated_question,
    parse_statements,
    parse_verdicts,
)
from rageval.core.scoring import (
    context_relevance_score,
    cosine_similarity,
    faithfulness_score,
    mean_similarity,
)
from rageval.core.sentences import split_sentences
from rageval.models.llm import ChatRequest, EmbeddingRequest
from rageval.models.records import (
    AnswerRelevanceResult,
    ContextRelevanceResult,
    EvalRecord,
    FaithfulnessResult,
    GeneratedQuestions,
    Verdict,
    VerdictSet,
)
from rageval.models.run import MetricFailure, MetricReport
from rageval.models.settings import MetricConfig
from rageval.services.llm_gateway import LlmGateway
from rageval.utils.exceptions import EmptyQuestion, RagEvalError, ResponseParseError

logger = logging.getLogger(__name__)

T = TypeVar("T")

# seed_hint used for the one parse retry of a non-generative prompt
PARSE_RETRY_SEED = 1


class PromptRunner:
    """Sends rendered prompts to the judge model, with one retry on unparseable output."""

    def __init__(self, gateway: LlmGateway, config: MetricConfig):
        self.gateway = gateway
        self.config = config

    def ask(
        self,
        prompt: str,
        temperature: float,
        seed_hint: int | None = None,
        transcript: List[str] | None = None,
    ) -> str:
        request = ChatRequest.from_prompt(
            self.config.judge_model_id, prompt, temperature=temperature, seed_hint=seed_hint
        )
        exchange = self.gateway.chat_exchange(request)
        if transcript is not None:
            transcript.append(exchange.hexdigest)
        return exchange.response

    def ask_parsed(
        self,
        prompt: str,
        parse: Callable[[str], T],
        temperature: float,
        seed_hint: int | None = None,
        retry_seed_hint: int | None = PARSE_RETRY_SEED,
        transcript: List[str] | None = None,
    ) -> T:
        """
        Parses the response; on a parse error the prompt is sent once more with
        a different seed_hint (a distinct cache key) before giving up.
        """
        try:
            return parse(self.ask(prompt, temperature, seed_hint, transcript))
        except ResponseParseError as error:
            logger.info("Unparseable response (%s); retrying once.", error)
        return parse(self.ask(prompt, temperature, retry_seed_hint, transcript))


class MetricSuite:
    def __init__(self, gateway: LlmGateway, config: MetricConfig | None = None):
        self.config = config or MetricConfig()
        self.gateway = gateway
        self.runner = PromptRunner(gateway, self.config)

    def eval_faithfulness(
        self, record: EvalRecord, transcript: List[str] | None = None
    ) -> FaithfulnessResult:
        """Decomposes the answer into statements and checks each against the context."""
        judge_temperature = self.config.judge_temperature

        extraction_prompt = prompts.get_template(prompts.STATEMENT_EXTRACTION).render(
            {"question": record.question, "answer": record.answer}
        )
        statement_set = self.runner.ask_parsed(
            extraction_prompt, parse_statements, judge_temperature, transcript=transcript
        )

        # all statements go into a single verification prompt
        verification_prompt = prompts.get_template(prompts.STATEMENT_VERIFICATION).render(
            {"context": record.context, "statement i": list(statement_set.statements)}
        )
        parsed = self.runner.ask_parsed(
            verification_prompt,
            lambda raw: parse_verdicts(raw, len(statement_set)),
            judge_temperature,
            transcript=transcript,
        )

        verdict_set = VerdictSet(
            verdicts=tuple(
                Verdict(statement_index=i, supported=v.supported, explanation=v.explanation)
                for i, v in enumerate(parsed.verdicts)
            )
        )
        return FaithfulnessResult(
            score=faithfulness_score(verdict_set),
            statement_set=statement_set,
            verdict_set=verdict_set,
        )

    def eval_answer_relevance(
        self, record: EvalRecord, transcript: List[str] | None = None
    ) -> AnswerRelevanceResult:
        n = self.config.n_questions
        prompt = prompts.get_template(prompts.QUESTION_GENERATION).render(
            {"answer": record.answer}
        )

        questions: List[str] = []
        for i in range(n):
            try:
                questions.append(
                    self.runner.ask_parsed(
                        prompt,
                        parse_generated_question,
                        self.config.generation_temperature,
                        seed_hint=i,
                        retry_seed_hint=n + i,
                        transcript=transcript,
                    )
                )
            except ResponseParseError as error:
                logger.warning("Record %s: generated question %d unusable (%s)", record.id, i, error)

        if not questions:
            raise EmptyQuestion(f"Record {record.id}: no generated question could be parsed.")

        exchange = self.gateway.embed_exchange(
            EmbeddingRequest(
                model_id=self.config.embed_model_id,
                inputs=(record.question, *questions),
            )
        )
        if transcript is not None:
            transcript.append(exchange.hexdigest)

        original, *generated = exchange.response
        similarities = tuple(cosine_similarity(original, vector) for vector in generated)
        return AnswerRelevanceResult(
            score=mean_similarity(similarities),
            generated=GeneratedQuestions(questions=tuple(questions), similarities=similarities),
            degraded=len(questions) < n,
        )

    def score_context(
        self, question: str, context: str, transcript: List[str] | None = None
    ) -> ContextRelevanceResult:
        """
        Context relevance for a question/context pair; no answer needed.

        The denominator counts every sentence of the context, repeats included,
        so an extracted sentence counts once per occurrence in the context.
        """
        occurrences = Counter(split_sentences(context))
        total_sentences = sum(occurrences.values())

        prompt = prompts.get_template(prompts.CONTEXT_EXTRACTION).render(
            {"question": question, "context": context}
        )
        raw = self.runner.ask(prompt, self.config.judge_temperature, transcript=transcript)
        sentences, insufficient = parse_extracted_sentences(raw, context)
        extracted_count = sum(occurrences[sentence] for sentence in sentences)

        return ContextRelevanceResult(
            score=context_relevance_score(extracted_count, total_sentences, insufficient),
            extracted_sentences=tuple(sentences),
            total_sentences=total_sentences,
            insufficient=insufficient,
        )

    def eval_context_relevance(
        self, record: EvalRecord, transcript: List[str] | None = None
    ) -> ContextRelevanceResult:
        return self.score_context(record.question, record.context, transcript)

    def evaluate(self, record: EvalRecord) -> MetricReport:
        """Runs all three metrics; a failing metric becomes a MetricFailure, never a score."""
        transcript: List[str] = []
        outcomes = {}
        for name, pipeline in (
            ("faithfulness", self.eval_faithfulness),
            ("answer_relevance", self.eval_answer_relevance),
            ("context_relevance", self.eval_context_relevance),
        ):
            try:
                outcomes[name] = pipeline(record, transcript)
            except RagEvalError as error:
                logger.warning("Record %s: %s failed: %s", record.id, name, error)
                outcomes[name] = MetricFailure.from_error(name, error)

        return MetricReport(record_id=record.id, transcripts=tuple(transcript), **outcomes)
