"""
Reading and writing the JSONL datasets: WikiEval records, scoring triples and
source documents.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Iterable, Iterator, List, Tuple, Type, TypeVar

from pydantic import BaseModel, ValidationError

from rageval.core.sentences import normalize_whitespace, split_sentences
from rageval.models.dataset import SCHEMA_ID, SourceDocument, TripleLine, WikiEvalRecord
from rageval.models.records import EvalRecord, PairwiseInstance
from rageval.utils.enumerators import Dimension, LabelSource, Preference
from rageval.utils.exceptions import DuplicateId, SchemaViolation

logger = logging.getLogger(__name__)

M = TypeVar("M", bound=BaseModel)


def file_digest(path: Path) -> str:
    sha = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            sha.update(chunk)
    return sha.hexdigest()


def _read_lines(path: Path, model: Type[M]) -> Iterator[Tuple[int, M]]:
    """Yields (line number, parsed line); blank lines are skipped."""
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as error:
                raise SchemaViolation(lineno, "<line>", f"not valid JSON ({error.msg})")
            if not isinstance(data, dict):
                raise SchemaViolation(lineno, "<line>", "expected a JSON object")
            try:
                yield lineno, model.model_validate(data)
            except ValidationError as error:
                first = error.errors()[0]
                field = ".".join(str(part) for part in first["loc"]) or "<line>"
                raise SchemaViolation(lineno, field, first["msg"])


def _check_unique(lineno: int, record_id: str, seen: set):
    if record_id in seen:
        raise DuplicateId(lineno, record_id)
    seen.add(record_id)


def missing_focused_sentences(focused_context: str, diluted_context: str) -> List[str]:
    """Sentences of the focused context that do not appear verbatim in the diluted one."""
    diluted = normalize_whitespace(diluted_context)
    return [s for s in split_sentences(focused_context) if s not in diluted]


def load_records(path: Path) -> List[WikiEvalRecord]:
    """
    Loads WikiEval records. Records without an id get `line-<n>`. Raises
    SchemaViolation (with line and field) or DuplicateId.
    """
    records: List[WikiEvalRecord] = []
    seen: set = set()
    for lineno, record in _read_lines(Path(path), WikiEvalRecord):
        if record.schema_id is not None and record.schema_id != SCHEMA_ID:
            raise SchemaViolation(lineno, "schema", f"unsupported schema '{record.schema_id}'")
        if record.id is None:
            record = record.model_copy(update={"id": f"line-{lineno}"})
        _check_unique(lineno, record.id, seen)

        missing = missing_focused_sentences(record.focused_context, record.diluted_context)
        if missing:
            logger.warning(
                "Record %s: %d focused-context sentence(s) not found in the diluted context.",
                record.id,
                len(missing),
            )
        records.append(record)

    if not records:
        logger.warning("Dataset %s is empty.", path)
    return records


def save_records(records: Iterable[WikiEvalRecord], path: Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(dump_record(record) + "\n")


def dump_record(record: WikiEvalRecord) -> str:
    stamped = record.model_copy(update={"schema_id": SCHEMA_ID})
    return json.dumps(
        stamped.model_dump(mode="json", by_alias=True, exclude_defaults=True),
        ensure_ascii=False,
    )


def expand_pairwise(record: WikiEvalRecord) -> List[PairwiseInstance]:
    """
    One instance per dimension. Without an explicit label the constructed
    high side (A) is the preferred one, marked construction-implied.
    """
    labels = record.labels

    def preference(dimension: Dimension) -> Tuple[Preference, LabelSource]:
        label = getattr(labels, dimension.value) if labels else None
        if label is None:
            return Preference.A, LabelSource.CONSTRUCTION
        return Preference(label), LabelSource.HUMAN

    instances = []
    for dimension, candidate_a, candidate_b in (
        (Dimension.FAITHFULNESS, record.grounded_answer, record.ungrounded_answer),
        (Dimension.ANSWER_RELEVANCE, record.grounded_answer, record.incomplete_answer),
        (Dimension.CONTEXT_RELEVANCE, record.focused_context, record.diluted_context),
    ):
        if normalize_whitespace(candidate_a) == normalize_whitespace(candidate_b):
            logger.warning(
                "Record %s: identical %s candidates, no instance emitted.",
                record.id,
                dimension.value,
            )
            continue
        human, source = preference(dimension)
        is_context_row = dimension is Dimension.CONTEXT_RELEVANCE
        instances.append(
            PairwiseInstance(
                id=f"{record.id}:{dimension.value}",
                question=record.question,
                dimension=dimension,
                candidate_a=candidate_a,
                candidate_b=candidate_b,
                human_preference=human,
                context=None if is_context_row else record.focused_context,
                answer=record.grounded_answer if is_context_row else None,
                label_source=source,
            )
        )
    return instances


def load_dataset(path: Path) -> List[PairwiseInstance]:
    """Loads a WikiEval file and expands every record into three pairwise instances."""
    instances: List[PairwiseInstance] = []
    for record in load_records(path):
        instances.extend(expand_pairwise(record))
    return instances


def load_triples(path: Path) -> List[EvalRecord]:
    records: List[EvalRecord] = []
    seen: set = set()
    for lineno, line in _read_lines(Path(path), TripleLine):
        record_id = line.id or f"line-{lineno}"
        _check_unique(lineno, record_id, seen)
        records.append(
            EvalRecord(
                id=record_id,
                question=line.question,
                context=line.context,
                answer=line.answer,
                metadata=dict(line.metadata),
            )
        )
    if not records:
        logger.warning("Triples file %s is empty.", path)
    return records


def load_documents(path: Path) -> List[SourceDocument]:
    documents: List[SourceDocument] = []
    seen: set = set()
    for lineno, document in _read_lines(Path(path), SourceDocument):
        _check_unique(lineno, document.id, seen)
        documents.append(document)
    return documents
