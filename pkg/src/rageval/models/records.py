from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from rageval.utils.enumerators import Dimension, LabelSource, Method, Preference


def _require_text(value: str, name: str):
    if not isinstance(value, str) or not value.strip():
        raise ValueError(f"{name} must be non-empty text.")


@dataclass(frozen=True)
class EvalRecord:
    """One (question, context, answer) triple, the unit of scoring."""

    id: str
    question: str
    context: str
    answer: str
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        _require_text(self.id, "id")
        _require_text(self.question, "question")
        _require_text(self.context, "context")
        _require_text(self.answer, "answer")


@dataclass(frozen=True)
class StatementSet:
    statements: tuple[str, ...]

    def __post_init__(self):
        for statement in self.statements:
            _require_text(statement, "statement")

    def __len__(self):
        return len(self.statements)


@dataclass(frozen=True)
class Verdict:
    statement_index: int
    supported: bool
    explanation: str = ""


@dataclass(frozen=True)
class VerdictSet:
    verdicts: tuple[Verdict, ...]

    def __post_init__(self):
        indices = [v.statement_index for v in self.verdicts]
        if indices != list(range(len(indices))):
            raise ValueError("Verdict statement indices must run 0..n-1 in order.")

    @property
    def supported_count(self) -> int:
        return sum(1 for v in self.verdicts if v.supported)

    def __len__(self):
        return len(self.verdicts)


@dataclass(frozen=True)
class FaithfulnessResult:
    score: Fraction
    statement_set: StatementSet
    verdict_set: VerdictSet

    def __post_init__(self):
        if len(self.verdict_set) != len(self.statement_set) or not self.statement_set:
            raise ValueError("Faithfulness needs one verdict per statement and at least one statement.")
        if self.score != Fraction(self.verdict_set.supported_count, len(self.verdict_set)):
            raise ValueError("Faithfulness score does not match the verdicts.")


@dataclass(frozen=True)
class GeneratedQuestions:
    questions: tuple[str, ...]
    similarities: tuple[float, ...]

    def __post_init__(self):
        if not self.questions or len(self.questions) != len(self.similarities):
            raise ValueError("Generated questions and similarities must be non-empty and aligned.")


@dataclass(frozen=True)
class AnswerRelevanceResult:
    score: float
    generated: GeneratedQuestions
    # fewer questions parsed than requested
    degraded: bool = False


@dataclass(frozen=True)
class ContextRelevanceResult:
    score: Fraction
    extracted_sentences: tuple[str, ...]
    total_sentences: int
    insufficient: bool

    def __post_init__(self):
        if self.total_sentences < 1:
            raise ValueError("total_sentences must be positive.")
        if self.insufficient and (self.extracted_sentences or self.score != 0):
            raise ValueError("An insufficient extraction carries no sentences and scores 0.")


@dataclass(frozen=True)
class PairwiseInstance:
    """
    One question with two candidates and a preference label.

    Faithfulness and answer relevance compare candidate answers against a fixed
    context; context relevance compares candidate contexts for the question.
    """

    id: str
    question: str
    dimension: Dimension
    candidate_a: str
    candidate_b: str
    human_preference: Preference
    context: str | None = None
    # grounded answer, kept for context-relevance rows
    answer: str | None = None
    label_source: LabelSource = LabelSource.HUMAN

    def __post_init__(self):
        _require_text(self.question, "question")
        _require_text(self.candidate_a, "candidate_a")
        _require_text(self.candidate_b, "candidate_b")
        if self.candidate_a == self.candidate_b:
            raise ValueError(f"Instance {self.id}: candidates A and B are identical.")
        if self.dimension is Dimension.CONTEXT_RELEVANCE:
            if self.context is not None:
                raise ValueError(f"Instance {self.id}: context-relevance rows compare contexts, no fixed context.")
        elif not self.context:
            raise ValueError(f"Instance {self.id}: {self.dimension.value} rows need a fixed context.")

    def record_for(self, side: Preference) -> EvalRecord:
        """Builds the scoring triple for one candidate (answer dimensions only)."""
        candidate = self.candidate_a if side is Preference.A else self.candidate_b
        return EvalRecord(
            id=f"{self.id}:{side.value}",
            question=self.question,
            context=self.context or "",
            answer=candidate,
        )


@dataclass(frozen=True)
class AgreementCell:
    dimension: Dimension
    method: Method
    n_instances: int
    n_agreements: int
    n_unevaluable: int = 0

    def __post_init__(self):
        if not 0 <= self.n_agreements <= self.n_instances:
            raise ValueError("n_agreements must lie in 0..n_instances.")

    @property
    def accuracy(self) -> Fraction | None:
        if self.n_instances == 0:
            return None
        return Fraction(self.n_agreements, self.n_instances)


@dataclass(frozen=True)
class AgreementTable:
    cells: tuple[AgreementCell, ...]

    def cell(self, dimension: Dimension, method: Method) -> AgreementCell | None:
        for cell in self.cells:
            if cell.dimension is dimension and cell.method is method:
                return cell
        return None

    @property
    def methods(self) -> list[Method]:
        seen: list[Method] = []
        for cell in self.cells:
            if cell.method not in seen:
                seen.append(cell.method)
        return seen
