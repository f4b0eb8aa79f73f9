"""
Pairwise preference prediction and agreement with human labels.
"""

import logging
import random
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

from rageval.core.baselines import BaselineJudge, ScorePayload
from rageval.core.metrics import MetricSuite
from rageval.models.records import AgreementCell, AgreementTable, PairwiseInstance
from rageval.models.run import InstanceOutcome
from rageval.utils.enumerators import Dimension, Method, Preference
from rageval.utils.exceptions import RagEvalError

logger = logging.getLogger(__name__)

Score = float | int | Fraction


def tie_coin(seed: int, instance_id: str, method: Method) -> Preference:
    """Seeded coin for one (instance, method); independent of evaluation order."""
    rng = random.Random(f"{seed}:{instance_id}:{method.value}")
    return Preference.A if rng.random() < 0.5 else Preference.B


def argmax_preference(
    score_a: Score, score_b: Score, coin: Callable[[], Preference]
) -> Preference:
    if score_a > score_b:
        return Preference.A
    if score_b > score_a:
        return Preference.B
    return coin()


def _json_score(score: Score) -> float | int:
    return float(score) if isinstance(score, Fraction) else score


class PreferenceJudge:
    """Predicts which candidate of a pairwise instance a method prefers."""

    def __init__(self, suite: MetricSuite, judge: BaselineJudge, rng_seed: int = 0):
        self.suite = suite
        self.judge = judge
        self.rng_seed = rng_seed

    def prefer_by_metric(
        self, dimension: Dimension, instance: PairwiseInstance, method: Method
    ) -> InstanceOutcome:
        """
        Returns the outcome for one instance. Any pipeline failure on either
        candidate makes the instance unevaluable for this method; no guess is made.
        """
        if instance.dimension is not dimension:
            raise ValueError(
                f"Instance {instance.id} is a {instance.dimension.value} row, not {dimension.value}."
            )

        outcome = dict(
            instance_id=instance.id,
            dimension=dimension,
            method=method,
            human=instance.human_preference,
            label_source=instance.label_source,
        )
        try:
            if method is Method.GPT_RANKING:
                predicted = self.judge.gpt_rank(
                    dimension,
                    instance.question,
                    instance.candidate_a,
                    instance.candidate_b,
                    context=instance.context,
                )
                detail: dict[str, Any] = {"ranking": predicted.value}
            else:
                score_a, score_b = self._scores(instance, method)
                predicted = argmax_preference(
                    score_a, score_b, lambda: tie_coin(self.rng_seed, instance.id, method)
                )
                detail = {
                    "score_a": _json_score(score_a),
                    "score_b": _json_score(score_b),
                    "tie": score_a == score_b,
                }
        except RagEvalError as error:
            reason = f"{type(error).__name__}: {error}"
            logger.warning("Instance %s unevaluable with %s: %s", instance.id, method.value, reason)
            return InstanceOutcome(**outcome, unevaluable_reason=reason)

        return InstanceOutcome(**outcome, predicted=predicted, detail=detail)

    def _scores(self, instance: PairwiseInstance, method: Method) -> tuple[Score, Score]:
        candidates = (instance.candidate_a, instance.candidate_b)
        dimension = instance.dimension

        if method is Method.RAGAS:
            if dimension is Dimension.FAITHFULNESS:
                return tuple(
                    self.suite.eval_faithfulness(instance.record_for(side)).score
                    for side in Preference
                )
            if dimension is Dimension.ANSWER_RELEVANCE:
                return tuple(
                    self.suite.eval_answer_relevance(instance.record_for(side)).score
                    for side in Preference
                )
            return tuple(
                self.suite.score_context(instance.question, candidate).score
                for candidate in candidates
            )

        # one separate score call per candidate
        if dimension is Dimension.FAITHFULNESS:
            payloads = [ScorePayload(context=instance.context, answer=c) for c in candidates]
        elif dimension is Dimension.ANSWER_RELEVANCE:
            payloads = [ScorePayload(question=instance.question, answer=c) for c in candidates]
        else:
            payloads = [ScorePayload(question=instance.question, context=c) for c in candidates]
        return tuple(self.judge.gpt_score(dimension, payload) for payload in payloads)


def build_agreement_table(
    outcomes: Iterable[InstanceOutcome], methods: Sequence[Method]
) -> AgreementTable:
    """
    Aggregates outcomes into one cell per (dimension, method). Unevaluable
    instances are excluded from the denominator and counted separately.
    """
    outcomes = list(outcomes)
    dimensions = [d for d in Dimension if any(o.dimension is d for o in outcomes)]

    cells = []
    for method in methods:
        for dimension in dimensions:
            rows = [o for o in outcomes if o.method is method and o.dimension is dimension]
            evaluable = [o for o in rows if o.evaluable]
            cells.append(
                AgreementCell(
                    dimension=dimension,
                    method=method,
                    n_instances=len(evaluable),
                    n_agreements=sum(1 for o in evaluable if o.agreed),
                    n_unevaluable=len(rows) - len(evaluable),
                )
            )
    return AgreementTable(cells=tuple(cells))
