import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Sequence

from rageval.core.agreement import PreferenceJudge, build_agreement_table
from rageval.core.baselines import BaselineJudge
from rageval.core.metrics import MetricSuite
from rageval.models.records import AgreementTable, EvalRecord, PairwiseInstance
from rageval.models.run import InstanceOutcome, MetricReport
from rageval.models.settings import MetricConfig
from rageval.services.llm_gateway import LlmGateway
from rageval.utils.enumerators import Method

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[], None]


@dataclass(frozen=True)
class AgreementRun:
    table: AgreementTable
    outcomes: List[InstanceOutcome]


class EvaluationRunner:
    """
    Drives batch runs. Records and instances are processed concurrently; the
    gateway's concurrency bound is also the worker count. Results always come
    back in input order.
    """

    def __init__(self, gateway: LlmGateway, config: MetricConfig | None = None):
        self.config = config or MetricConfig()
        self.gateway = gateway
        self.suite = MetricSuite(gateway, self.config)
        self.judge = BaselineJudge(gateway, self.config)
        self.preferences = PreferenceJudge(self.suite, self.judge, self.config.rng_seed)
        self.max_workers = gateway.config.max_concurrency

    def score_records(
        self, records: Sequence[EvalRecord], on_progress: ProgressCallback | None = None
    ) -> List[MetricReport]:
        def score(record: EvalRecord) -> MetricReport:
            try:
                return self.suite.evaluate(record)
            finally:
                if on_progress:
                    on_progress()

        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            return list(pool.map(score, records))

    def run_agreement(
        self,
        instances: Sequence[PairwiseInstance],
        methods: Sequence[Method],
        on_progress: ProgressCallback | None = None,
    ) -> AgreementRun:
        """Every instance is judged by every method; methods share no state beyond the cache."""
        tasks = [(instance, method) for method in methods for instance in instances]

        def judge(task) -> InstanceOutcome:
            instance, method = task
            try:
                return self.preferences.prefer_by_metric(instance.dimension, instance, method)
            finally:
                if on_progress:
                    on_progress()

        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            outcomes = list(pool.map(judge, tasks))

        unevaluable = sum(1 for o in outcomes if not o.evaluable)
        if unevaluable:
            logger.info("%d of %d instance judgements were unevaluable.", unevaluable, len(outcomes))
        return AgreementRun(table=build_agreement_table(outcomes, methods), outcomes=outcomes)


def run_agreement(
    instances: Sequence[PairwiseInstance],
    methods: Sequence[Method],
    gateway: LlmGateway,
    config: MetricConfig | None = None,
) -> AgreementTable:
    return EvaluationRunner(gateway, config).run_agreement(instances, methods).table
