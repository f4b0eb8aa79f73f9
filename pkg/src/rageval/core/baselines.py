"""
Direct-judgement baselines: ask the judge model for a 0-10 score, or to rank
two candidates, for a single quality dimension.
"""

import logging
from dataclasses import asdict, dataclass
from typing import List

from rageval.core import prompts
from rageval.core.metrics import PromptRunner
from rageval.core.parser import parse_ranking, parse_score_0_10
from rageval.models.settings import MetricConfig
from rageval.services.llm_gateway import LlmGateway
from rageval.utils.enumerators import Dimension, Preference
from rageval.utils.exceptions import MissingBinding

logger = logging.getLogger(__name__)

SCORE_TEMPLATES = {
    Dimension.FAITHFULNESS: prompts.GPT_SCORE_FAITHFULNESS,
    Dimension.ANSWER_RELEVANCE: prompts.GPT_SCORE_ANSWER_RELEVANCE,
    Dimension.CONTEXT_RELEVANCE: prompts.GPT_SCORE_CONTEXT_RELEVANCE,
}

RANK_TEMPLATES = {
    Dimension.FAITHFULNESS: prompts.GPT_RANK_FAITHFULNESS,
    Dimension.ANSWER_RELEVANCE: prompts.GPT_RANK_ANSWER_RELEVANCE,
    Dimension.CONTEXT_RELEVANCE: prompts.GPT_RANK_CONTEXT_RELEVANCE,
}


@dataclass(frozen=True)
class ScorePayload:
    """The fields a score prompt may need; which ones depends on the dimension."""

    question: str | None = None
    context: str | None = None
    answer: str | None = None


class BaselineJudge:
    def __init__(self, gateway: LlmGateway, config: MetricConfig | None = None):
        self.config = config or MetricConfig()
        self.runner = PromptRunner(gateway, self.config)

    def gpt_score(
        self,
        dimension: Dimension,
        payload: ScorePayload,
        transcript: List[str] | None = None,
    ) -> int:
        """Integer 0-10 score for one payload. Raises UnparseableScore or OutOfRange."""
        template = prompts.get_template(SCORE_TEMPLATES[dimension])
        available = asdict(payload)

        bindings = {}
        for name in template.placeholders:
            if available.get(name) is None:
                raise MissingBinding(
                    f"Template '{template.name}' needs '{name}' to score {dimension.value}."
                )
            bindings[name] = available[name]

        return self.runner.ask_parsed(
            template.render(bindings),
            parse_score_0_10,
            self.config.judge_temperature,
            transcript=transcript,
        )

    def gpt_rank(
        self,
        dimension: Dimension,
        question: str,
        candidate_a: str,
        candidate_b: str,
        context: str | None = None,
        transcript: List[str] | None = None,
    ) -> Preference:
        """Asks which of two candidates is better; candidate A is shown first."""
        template = prompts.get_template(RANK_TEMPLATES[dimension])

        if dimension is Dimension.CONTEXT_RELEVANCE:
            bindings = {"question": question, "context 1": candidate_a, "context 2": candidate_b}
        else:
            bindings = {"question": question, "answer 1": candidate_a, "answer 2": candidate_b}
            if dimension is Dimension.FAITHFULNESS:
                if context is None:
                    raise MissingBinding("Ranking faithfulness needs the shared context.")
                bindings["context"] = context

        return self.runner.ask_parsed(
            template.render(bindings),
            parse_ranking,
            self.config.judge_temperature,
            transcript=transcript,
        )
