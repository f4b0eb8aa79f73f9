from __future__ import annotations

import csv
import json
from fractions import Fraction

from rageval.core.report import (
    AGREEMENT_CSV,
    AGREEMENT_MD,
    MANIFEST_JSON,
    REPORT_JSON,
    REPORT_SCHEMA,
    SCORES_CSV,
    SCORES_MD,
    agreement_markdown,
    bundle_to_dict,
    emit_report,
    write_manifest,
)
from rageval.models.records import (
    AgreementCell,
    AgreementTable,
    AnswerRelevanceResult,
    ContextRelevanceResult,
    FaithfulnessResult,
    GeneratedQuestions,
    StatementSet,
    Verdict,
    VerdictSet,
)
from rageval.models.run import InstanceOutcome, MetricFailure, MetricReport, ReportBundle, RunManifest
from rageval.utils.enumerators import Dimension, LabelSource, Method, Preference, ReportFormat


def _manifest(command="agree") -> RunManifest:
    return RunManifest(
        command=command,
        dataset_path="wikieval.jsonl",
        dataset_digest="abc123",
        backend_id="scripted",
        backend_config_digest="def456",
        metric_config={"n_questions": 3},
        methods=["ragas", "gpt-score"],
        rng_seed=7,
        started_at="2024-01-01T00:00:00+00:00",
        finished_at="2024-01-01T00:01:00+00:00",
    )


def _table() -> AgreementTable:
    return AgreementTable(
        cells=(
            AgreementCell(Dimension.FAITHFULNESS, Method.RAGAS, n_instances=50, n_agreements=48),
            AgreementCell(Dimension.CONTEXT_RELEVANCE, Method.RAGAS, n_instances=49, n_agreements=35, n_unevaluable=1),
            AgreementCell(Dimension.FAITHFULNESS, Method.GPT_SCORE, n_instances=0, n_agreements=0, n_unevaluable=50),
            AgreementCell(Dimension.CONTEXT_RELEVANCE, Method.GPT_SCORE, n_instances=50, n_agreements=26),
        )
    )


def _instances() -> list[InstanceOutcome]:
    return [
        InstanceOutcome(
            instance_id="q1:faithfulness",
            dimension=Dimension.FAITHFULNESS,
            method=Method.RAGAS,
            human=Preference.A,
            label_source=LabelSource.CONSTRUCTION,
            predicted=Preference.A,
            detail={"score_a": 1.0, "score_b": 0.5, "tie": False},
        ),
        InstanceOutcome(
            instance_id="q1:faithfulness",
            dimension=Dimension.FAITHFULNESS,
            method=Method.GPT_SCORE,
            human=Preference.A,
            label_source=LabelSource.CONSTRUCTION,
            unevaluable_reason="UnparseableScore: no integer",
        ),
    ]


def _metric_report(record_id="r1", failed=False) -> MetricReport:
    faithfulness = FaithfulnessResult(
        score=Fraction(2, 3),
        statement_set=StatementSet(("A.", "B.", "C.")),
        verdict_set=VerdictSet(
            (Verdict(0, True, "stated"), Verdict(1, True, "stated"), Verdict(2, False, "absent"))
        ),
    )
    relevance = (
        MetricFailure("answer_relevance", "EmptyQuestion", "no question")
        if failed
        else AnswerRelevanceResult(
            score=0.9, generated=GeneratedQuestions(("Q?",), (0.9,))
        )
    )
    context = ContextRelevanceResult(
        score=Fraction(1, 4), extracted_sentences=("X.",), total_sentences=4, insufficient=False
    )
    return MetricReport(
        record_id=record_id,
        faithfulness=faithfulness,
        answer_relevance=relevance,
        context_relevance=context,
        transcripts=("d1", "d2"),
    )


def _agree_bundle() -> ReportBundle:
    return ReportBundle(manifest=_manifest(), table=_table(), instance_log=_instances())


def test_report_json_reparses_to_the_bundle(tmp_path):
    bundle = _agree_bundle()
    emit_report(bundle, [ReportFormat.JSON], tmp_path)
    data = json.loads((tmp_path / REPORT_JSON).read_text(encoding="utf-8"))

    assert data == bundle_to_dict(bundle)
    assert data["schema"] == REPORT_SCHEMA
    assert "started_at" not in data["run"]


def test_report_json_cells_recompute_accuracy(tmp_path):
    emit_report(_agree_bundle(), [ReportFormat.JSON], tmp_path)
    data = json.loads((tmp_path / REPORT_JSON).read_text(encoding="utf-8"))

    for cell in data["agreement"]:
        if cell["n_instances"]:
            assert cell["accuracy"] == cell["n_agreements"] / cell["n_instances"]
        else:
            assert cell["accuracy"] is None
    assert data["failure_rate"] == 0.5
    assert data["failures"] == {"gpt-score:faithfulness:unevaluable": 1}


def test_report_json_is_byte_stable(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    emit_report(_agree_bundle(), [ReportFormat.JSON], first)
    emit_report(_agree_bundle(), [ReportFormat.JSON], second)
    assert (first / REPORT_JSON).read_bytes() == (second / REPORT_JSON).read_bytes()


def test_agreement_csv_rows(tmp_path):
    emit_report(_agree_bundle(), [ReportFormat.CSV], tmp_path)
    with open(tmp_path / AGREEMENT_CSV, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))

    assert len(rows) == 4
    assert rows[0] == {
        "method": "ragas",
        "dimension": "faithfulness",
        "accuracy": "0.96",
        "n_agreements": "48",
        "n_instances": "50",
        "n_unevaluable": "0",
    }
    assert rows[2]["accuracy"] == ""
    assert not (tmp_path / SCORES_CSV).exists()


def test_agreement_markdown_layout():
    markdown = agreement_markdown(_table(), ["construction-implied"])
    lines = markdown.splitlines()

    assert lines[0] == "| | Faith. | Cont. Rel. |"
    assert lines[2] == "| RAGAs | 0.96 | 0.71 |"
    assert lines[3] == "| GPT Score | n/a | 0.52 |"
    assert "- RAGAs: Faith. 48/50, Cont. Rel. 35/49 (1 unevaluable)" in lines
    assert "construction-implied" in lines[-1]


def test_agreement_markdown_without_construction_labels():
    assert "construction-implied" not in agreement_markdown(_table(), ["human"])


def test_scores_outputs(tmp_path):
    bundle = ReportBundle(
        manifest=_manifest("score"), reports=[_metric_report(), _metric_report("r2", failed=True)]
    )
    written = emit_report(bundle, list(ReportFormat), tmp_path)

    assert sorted(p.name for p in written) == sorted([REPORT_JSON, SCORES_CSV, SCORES_MD])

    with open(tmp_path / SCORES_CSV, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert rows[0]["faithfulness"] == repr(2 / 3)
    assert rows[0]["failures"] == ""
    assert rows[1]["answer_relevance"] == ""
    assert rows[1]["failures"] == "answer_relevance:EmptyQuestion"

    markdown = (tmp_path / SCORES_MD).read_text(encoding="utf-8")
    assert "| r1 | 0.667 | 0.900 | 0.250 |" in markdown
    assert "failed (EmptyQuestion)" in markdown

    data = json.loads((tmp_path / REPORT_JSON).read_text(encoding="utf-8"))
    assert data["agreement"] is None
    assert data["records"][0]["faithfulness"]["score_exact"] == "2/3"
    assert data["records"][1]["answer_relevance"]["failure"]["error_type"] == "EmptyQuestion"
    assert data["failure_rate"] == 0.5


def test_only_requested_formats_are_written(tmp_path):
    written = emit_report(_agree_bundle(), [ReportFormat.MARKDOWN], tmp_path)
    assert [p.name for p in written] == [AGREEMENT_MD]
    assert not (tmp_path / REPORT_JSON).exists()


def test_manifest_round_trip(tmp_path):
    manifest = _manifest()
    manifest.token_usage = {"prompt_tokens": 10}
    path = write_manifest(manifest, tmp_path)

    assert path.name == MANIFEST_JSON
    assert RunManifest.from_dict(json.loads(path.read_text(encoding="utf-8"))) == manifest
