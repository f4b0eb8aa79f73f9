from __future__ import annotations

import json
import logging

import pytest

from rageval.core.dataset import (
    dump_record,
    expand_pairwise,
    file_digest,
    load_dataset,
    load_documents,
    load_records,
    load_triples,
    missing_focused_sentences,
    save_records,
)
from rageval.models.dataset import SCHEMA_ID, WikiEvalRecord
from rageval.utils.enumerators import Dimension, LabelSource, Preference
from rageval.utils.exceptions import DuplicateId, SchemaViolation
from tests.appendix import (
    CHIMNABAI_HIGH,
    CHIMNABAI_LOW,
    CHIMNABAI_QUESTION,
    OPPENHEIMER_CONTEXT,
    OPPENHEIMER_HIGH,
    OPPENHEIMER_LOW,
    OPPENHEIMER_QUESTION,
)


def _line(**overrides) -> dict:
    line = {
        "schema": SCHEMA_ID,
        "id": "chimnabai",
        "source_id": "Chimnabai Clock Tower",
        "question": CHIMNABAI_QUESTION,
        "grounded_answer": "It was completed in 1896 and named after Chimnabai I.",
        "ungrounded_answer": "It was completed in 1920 and named after a British governor.",
        "incomplete_answer": "It was completed in 1896.",
        "focused_context": CHIMNABAI_HIGH,
        "diluted_context": CHIMNABAI_LOW,
    }
    line.update(overrides)
    return {k: v for k, v in line.items() if v is not None}


def _write(path, *lines):
    path.write_text(
        "".join((line if isinstance(line, str) else json.dumps(line)) + "\n" for line in lines),
        encoding="utf-8",
    )
    return path


def test_load_first_party_record(tmp_path):
    records = load_records(_write(tmp_path / "wikieval.jsonl", _line()))
    assert len(records) == 1
    record = records[0]
    assert record.id == "chimnabai"
    assert record.focused_context == CHIMNABAI_HIGH
    assert record.labels is None


def test_published_layout_is_accepted(tmp_path):
    published = {
        "question": OPPENHEIMER_QUESTION,
        "answer": OPPENHEIMER_HIGH,
        "ungrounded_answer": OPPENHEIMER_LOW,
        "poor_answer": "Christopher Nolan directed it.",
        "context_v1": [OPPENHEIMER_CONTEXT],
        "context_v2": [OPPENHEIMER_CONTEXT, "The film grossed over $950 million worldwide."],
        "source": "Oppenheimer (film)",
    }
    record = load_records(_write(tmp_path / "published.jsonl", published))[0]

    assert record.id == "line-1"
    assert record.source_id == "Oppenheimer (film)"
    assert record.grounded_answer == OPPENHEIMER_HIGH
    assert record.incomplete_answer == "Christopher Nolan directed it."
    assert record.diluted_context.startswith(OPPENHEIMER_CONTEXT)


def test_missing_field_reports_line_and_field(tmp_path):
    path = _write(tmp_path / "bad.jsonl", _line(), _line(id="second", diluted_context=None))
    with pytest.raises(SchemaViolation) as info:
        load_records(path)
    assert info.value.line == 2
    assert info.value.field == "diluted_context"


def test_blank_field_is_a_schema_violation(tmp_path):
    with pytest.raises(SchemaViolation) as info:
        load_records(_write(tmp_path / "bad.jsonl", _line(question="   ")))
    assert info.value.field == "question"


def test_invalid_json_is_a_schema_violation(tmp_path):
    with pytest.raises(SchemaViolation) as info:
        load_records(_write(tmp_path / "bad.jsonl", _line(), "{not json"))
    assert info.value.line == 2


def test_bad_label_is_a_schema_violation(tmp_path):
    with pytest.raises(SchemaViolation) as info:
        load_records(_write(tmp_path / "bad.jsonl", _line(labels={"faithfulness": "C"})))
    assert info.value.field.startswith("labels")


def test_unknown_schema_is_rejected(tmp_path):
    with pytest.raises(SchemaViolation) as info:
        load_records(_write(tmp_path / "bad.jsonl", _line(schema="rageval.wikieval/9")))
    assert info.value.field == "schema"


def test_duplicate_id(tmp_path):
    with pytest.raises(DuplicateId) as info:
        load_records(_write(tmp_path / "dup.jsonl", _line(), _line()))
    assert info.value.line == 2
    assert info.value.record_id == "chimnabai"


def test_empty_file_warns(tmp_path, caplog):
    path = tmp_path / "empty.jsonl"
    path.write_text("\n", encoding="utf-8")
    with caplog.at_level(logging.WARNING):
        assert load_records(path) == []
    assert "empty" in caplog.text


def test_containment_failure_only_warns_on_load(tmp_path, caplog):
    path = _write(tmp_path / "w.jsonl", _line(diluted_context="Something else entirely. And more."))
    with caplog.at_level(logging.WARNING):
        records = load_records(path)
    assert len(records) == 1
    assert "not found in the diluted context" in caplog.text


def test_missing_focused_sentences():
    assert missing_focused_sentences(CHIMNABAI_HIGH, CHIMNABAI_LOW) == []
    # whitespace differences do not count as a loss
    assert missing_focused_sentences(CHIMNABAI_HIGH, CHIMNABAI_HIGH.replace(" ", "\n  ")) == []
    assert len(missing_focused_sentences(CHIMNABAI_HIGH, "It was built in 1896.")) == 2


def test_each_record_expands_to_three_instances(tmp_path):
    instances = load_dataset(_write(tmp_path / "w.jsonl", _line(), _line(id="second")))
    assert len(instances) == 6
    assert [i.dimension for i in instances[:3]] == list(Dimension)
    assert instances[0].id == "chimnabai:faithfulness"


def test_expansion_layout():
    record = WikiEvalRecord.model_validate(_line())
    faithfulness, relevance, context = expand_pairwise(record)

    assert faithfulness.candidate_a == record.grounded_answer
    assert faithfulness.candidate_b == record.ungrounded_answer
    assert faithfulness.context == CHIMNABAI_HIGH

    assert relevance.candidate_b == record.incomplete_answer
    assert relevance.context == CHIMNABAI_HIGH

    assert (context.candidate_a, context.candidate_b) == (CHIMNABAI_HIGH, CHIMNABAI_LOW)
    assert context.context is None
    assert context.answer == record.grounded_answer


def test_missing_labels_are_construction_implied():
    record = WikiEvalRecord.model_validate(_line(labels={"faithfulness": "B"}))
    faithfulness, relevance, _ = expand_pairwise(record)

    assert faithfulness.human_preference is Preference.B
    assert faithfulness.label_source is LabelSource.HUMAN
    assert relevance.human_preference is Preference.A
    assert relevance.label_source is LabelSource.CONSTRUCTION


def test_identical_candidates_are_skipped(caplog):
    record = WikiEvalRecord.model_validate(
        _line(incomplete_answer="It was completed in 1896 and named after Chimnabai I.")
    )
    with caplog.at_level(logging.WARNING):
        instances = expand_pairwise(record)
    assert [i.dimension for i in instances] == [Dimension.FAITHFULNESS, Dimension.CONTEXT_RELEVANCE]
    assert "identical" in caplog.text


def test_saved_records_load_back_unchanged(tmp_path):
    record = WikiEvalRecord.model_validate(
        _line(labels={"context_relevance": "A"}, review_flags=["checked"])
    )
    path = tmp_path / "out" / "wikieval.jsonl"
    save_records([record], path)

    assert load_records(path) == [record]
    line = json.loads(path.read_text(encoding="utf-8"))
    assert line["schema"] == SCHEMA_ID
    assert "schema_id" not in line


def test_dump_keeps_non_ascii_text():
    record = WikiEvalRecord.model_validate(_line())
    assert "1864–1885" in dump_record(record)


def test_load_triples(tmp_path):
    path = _write(
        tmp_path / "triples.jsonl",
        {"id": "t1", "question": "Q?", "context": "C.", "answer": "A."},
        {"question": "Q2?", "contexts": ["First passage.", "Second passage."], "answer": "A2."},
    )
    first, second = load_triples(path)
    assert first.id == "t1"
    assert second.id == "line-2"
    assert second.context == "First passage. Second passage."


def test_load_documents_rejects_duplicates(tmp_path):
    doc = {"id": "d1", "title": "Doc", "intro_text": "Intro sentence."}
    assert load_documents(_write(tmp_path / "docs.jsonl", doc))[0].extra_text is None
    with pytest.raises(DuplicateId):
        load_documents(_write(tmp_path / "dup.jsonl", doc, doc))


def test_file_digest_changes_with_content(tmp_path):
    path = _write(tmp_path / "w.jsonl", _line())
    before = file_digest(path)
    assert before == file_digest(path)
    _write(path, _line(id="other"))
    assert file_digest(path) != before
