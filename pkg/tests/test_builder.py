from __future__ import annotations

import threading

import pytest

from rageval.core.builder import (
    DUPLICATE_ANSWERS_FLAG,
    MAX_QUESTION_ATTEMPTS,
    DatasetBuilder,
    restates_intro,
)
from rageval.core.dataset import load_dataset, load_records
from rageval.models.dataset import SCHEMA_ID, SourceDocument
from rageval.utils.exceptions import ContainmentViolation, GenerationFailed
from tests.appendix import CHIMNABAI_HIGH, CHIMNABAI_QUESTION

DATASET_QUESTION = "formulate a question from given context"
GROUNDED_ANSWER = "using the information from the given context"
UNGROUNDED_ANSWER = "Answer the question.\n"
INCOMPLETE_ANSWER = "in an incomplete manner"
CONTEXT_COMPLETION = "Complete the given context"

EXTRA = (
    "It was built in Indo-Saracenic architecture style. "
    "It was inaugurated by Mir Kamaluddin Hussainkhan, the last Nawab of Baroda."
)


def _doc(id="chimnabai", intro=CHIMNABAI_HIGH, extra=None, title="Chimnabai Clock Tower"):
    return SourceDocument(id=id, title=title, intro_text=intro, extra_text=extra)


def _answers(router, grounded="It was completed in 1896 and named after Chimnabai I."):
    router.on(GROUNDED_ANSWER, response=grounded)
    router.on(UNGROUNDED_ANSWER, response="It was completed in 1920.")
    router.on(INCOMPLETE_ANSWER, response="It was completed in 1896.")
    return router


def test_question_mentioning_the_context_is_asked_again(make_gateway, router, metric_config):
    seeds = []

    def question(request):
        seeds.append(request.seed_hint)
        if len(seeds) == 1:
            return "According to the provided context, when was the tower completed?"
        return CHIMNABAI_QUESTION

    router.on(DATASET_QUESTION, response=question)
    builder = DatasetBuilder(make_gateway(router), metric_config)

    assert builder.build_question(_doc()) == CHIMNABAI_QUESTION
    assert seeds == [0, 1]


def test_question_with_a_link_is_rejected(make_gateway, router, metric_config):
    router.on(
        DATASET_QUESTION,
        response=["What does https://example.org say about the tower?", CHIMNABAI_QUESTION],
    )
    builder = DatasetBuilder(make_gateway(router), metric_config)
    assert builder.build_question(_doc()) == CHIMNABAI_QUESTION


def test_question_gives_up_after_max_attempts(make_gateway, router, metric_config):
    router.on(DATASET_QUESTION, response="What does the provided context say?")
    builder = DatasetBuilder(make_gateway(router), metric_config)

    with pytest.raises(GenerationFailed):
        builder.build_question(_doc())
    assert len(router.prompts) == MAX_QUESTION_ATTEMPTS


def test_answers_are_generated_from_their_own_prompts(make_gateway, router, metric_config):
    builder = DatasetBuilder(make_gateway(_answers(router)), metric_config)
    answers = builder.build_answers(_doc(), CHIMNABAI_QUESTION)

    assert answers.grounded.startswith("It was completed in 1896 and named")
    assert answers.ungrounded == "It was completed in 1920."
    assert answers.incomplete == "It was completed in 1896."
    assert answers.review_flags == ()

    grounded_prompt = next(p for p in router.prompts if GROUNDED_ANSWER in p)
    assert f"context: {CHIMNABAI_HIGH}" in grounded_prompt
    assert not any(CHIMNABAI_HIGH in p for p in router.prompts if p != grounded_prompt)


def test_identical_grounded_and_incomplete_answers_are_flagged(make_gateway, router, metric_config):
    builder = DatasetBuilder(make_gateway(_answers(router, grounded="It was completed in 1896.")), metric_config)
    answers = builder.build_answers(_doc(), CHIMNABAI_QUESTION)
    assert answers.review_flags == (DUPLICATE_ANSWERS_FLAG,)


def test_empty_answer_fails(make_gateway, router, metric_config):
    builder = DatasetBuilder(make_gateway(_answers(router, grounded="  ")), metric_config)
    with pytest.raises(GenerationFailed):
        builder.build_answers(_doc(), CHIMNABAI_QUESTION)


def test_diluted_context_from_extra_text_needs_no_model_call(make_gateway, router, metric_config):
    builder = DatasetBuilder(make_gateway(router), metric_config)
    diluted = builder.build_diluted_context(_doc(extra=EXTRA))

    assert diluted == f"{CHIMNABAI_HIGH} {EXTRA}"
    assert router.prompts == []


def test_diluted_context_from_model_continuation(make_gateway, router, metric_config):
    router.on(CONTEXT_COMPLETION, response=EXTRA)
    diluted = DatasetBuilder(make_gateway(router), metric_config).build_diluted_context(_doc())
    assert diluted == f"{CHIMNABAI_HIGH} {EXTRA}"


def test_continuation_repeating_the_context_is_used_whole(make_gateway, router, metric_config):
    router.on(CONTEXT_COMPLETION, response=f"{CHIMNABAI_HIGH}\n{EXTRA}")
    diluted = DatasetBuilder(make_gateway(router), metric_config).build_diluted_context(_doc())
    assert diluted == f"{CHIMNABAI_HIGH}\n{EXTRA}"
    assert diluted.count("Raopura Tower") == 1


REWRITTEN_INTRO = CHIMNABAI_HIGH.replace("is a clock tower situated in", "is a clock tower located in")


def test_continuation_rewriting_the_context_is_a_containment_violation(
    make_gateway, router, metric_config
):
    router.on(CONTEXT_COMPLETION, response=f"{REWRITTEN_INTRO} {EXTRA}")
    builder = DatasetBuilder(make_gateway(router), metric_config)

    with pytest.raises(ContainmentViolation):
        builder.build_diluted_context(_doc())


def test_build_dataset_reports_a_rewritten_context_as_a_failure(
    tmp_path, make_gateway, router, metric_config
):
    router.on(DATASET_QUESTION, response="What is described here?")
    router.on(CONTEXT_COMPLETION, response=f"{REWRITTEN_INTRO} {EXTRA}")
    _answers(router)

    summary = DatasetBuilder(make_gateway(router), metric_config).build_dataset(
        [_doc()], tmp_path / "wikieval.jsonl"
    )
    assert summary.records == []
    assert summary.failures["chimnabai"].startswith("ContainmentViolation:")


def test_restatement_detection():
    first_sentence_only = REWRITTEN_INTRO.split(" It was completed")[0]
    assert restates_intro(CHIMNABAI_HIGH, f"{first_sentence_only} {EXTRA}")
    assert restates_intro(CHIMNABAI_HIGH, f"{CHIMNABAI_HIGH} {EXTRA}")
    assert not restates_intro(CHIMNABAI_HIGH, EXTRA)


def test_empty_continuation_fails(make_gateway, router, metric_config):
    router.on(CONTEXT_COMPLETION, response="")
    with pytest.raises(GenerationFailed):
        DatasetBuilder(make_gateway(router), metric_config).build_diluted_context(_doc())


def test_build_record(make_gateway, router, metric_config):
    router.on(DATASET_QUESTION, response=CHIMNABAI_QUESTION)
    _answers(router)
    record = DatasetBuilder(make_gateway(router), metric_config).build_record(_doc(extra=EXTRA))

    assert record.schema_id == SCHEMA_ID
    assert record.id == "chimnabai"
    assert record.source_id == "Chimnabai Clock Tower"
    assert record.question == CHIMNABAI_QUESTION
    assert record.focused_context == CHIMNABAI_HIGH
    assert record.diluted_context.endswith(EXTRA)
    assert record.labels is None


def test_build_dataset_keeps_document_order_and_reports_failures(
    tmp_path, make_gateway, router, metric_config
):
    router.on(DATASET_QUESTION, "Broken intro", response="See www.example.org for the provided context?")
    router.on(DATASET_QUESTION, response="What is described here?")
    _answers(router)

    docs = [
        _doc(id=f"doc-{i}", intro=f"Intro number {i} is here. It has two sentences.", extra=EXTRA)
        for i in range(5)
    ]
    docs[2] = _doc(id="doc-2", intro="Broken intro sentence.", extra=EXTRA)

    progress = []
    lock = threading.Lock()

    def tick():
        with lock:
            progress.append(1)

    out = tmp_path / "out" / "wikieval.jsonl"
    summary = DatasetBuilder(make_gateway(router, max_concurrency=3), metric_config).build_dataset(
        docs, out, on_progress=tick
    )

    assert [r.id for r in summary.records] == ["doc-0", "doc-1", "doc-3", "doc-4"]
    assert list(summary.failures) == ["doc-2"]
    assert summary.failures["doc-2"].startswith("GenerationFailed:")
    assert len(progress) == 5

    assert [r.id for r in load_records(out)] == ["doc-0", "doc-1", "doc-3", "doc-4"]
    assert len(load_dataset(out)) == 12


def test_build_dataset_truncates_previous_output(tmp_path, make_gateway, router, metric_config):
    out = tmp_path / "wikieval.jsonl"
    out.write_text("stale line\n", encoding="utf-8")
    router.on(DATASET_QUESTION, response="What is described here?")
    _answers(router)

    DatasetBuilder(make_gateway(router), metric_config).build_dataset([_doc(extra=EXTRA)], out)
    assert "stale" not in out.read_text(encoding="utf-8")
    assert len(load_records(out)) == 1
