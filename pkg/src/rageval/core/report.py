"""
Writes a run's results to disk.

report.json holds everything needed to re-check the agreement arithmetic and
no wall-clock data, so two runs over the same transcript produce identical
bytes. Timestamps and token usage go to manifest.json instead.
"""

import csv
import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, List

from rageval.models.records import (
    AgreementCell,
    AgreementTable,
    AnswerRelevanceResult,
    ContextRelevanceResult,
    FaithfulnessResult,
)
from rageval.models.run import MetricFailure, MetricReport, ReportBundle, RunManifest
from rageval.utils.enumerators import Dimension, ReportFormat

logger = logging.getLogger(__name__)

REPORT_SCHEMA = "rageval.report/1"

REPORT_JSON = "report.json"
MANIFEST_JSON = "manifest.json"
AGREEMENT_CSV = "agreement.csv"
AGREEMENT_MD = "agreement.md"
SCORES_CSV = "scores.csv"
SCORES_MD = "scores.md"

METRICS = ("faithfulness", "answer_relevance", "context_relevance")


def _fraction(value: Fraction) -> dict[str, Any]:
    return {"score": float(value), "score_exact": f"{value.numerator}/{value.denominator}"}


def outcome_to_dict(outcome) -> dict[str, Any]:
    if isinstance(outcome, MetricFailure):
        return {
            "failure": {
                "metric": outcome.metric,
                "error_type": outcome.error_type,
                "message": outcome.message,
            }
        }
    if isinstance(outcome, FaithfulnessResult):
        return {
            **_fraction(outcome.score),
            "statements": list(outcome.statement_set.statements),
            "verdicts": [
                {
                    "statement_index": v.statement_index,
                    "supported": v.supported,
                    "explanation": v.explanation,
                }
                for v in outcome.verdict_set.verdicts
            ],
        }
    if isinstance(outcome, AnswerRelevanceResult):
        return {
            "score": outcome.score,
            "questions": list(outcome.generated.questions),
            "similarities": list(outcome.generated.similarities),
            "degraded": outcome.degraded,
        }
    if isinstance(outcome, ContextRelevanceResult):
        return {
            **_fraction(outcome.score),
            "extracted_sentences": list(outcome.extracted_sentences),
            "total_sentences": outcome.total_sentences,
            "insufficient": outcome.insufficient,
        }
    raise TypeError(f"Unexpected metric outcome {type(outcome).__name__}")


def metric_report_to_dict(report: MetricReport) -> dict[str, Any]:
    data: dict[str, Any] = {"record_id": report.record_id}
    for name in METRICS:
        data[name] = outcome_to_dict(getattr(report, name))
    data["transcripts"] = list(report.transcripts)
    return data


def cell_to_dict(cell: AgreementCell) -> dict[str, Any]:
    accuracy = cell.accuracy
    return {
        "dimension": cell.dimension.value,
        "method": cell.method.value,
        "n_instances": cell.n_instances,
        "n_agreements": cell.n_agreements,
        "n_unevaluable": cell.n_unevaluable,
        "accuracy": float(accuracy) if accuracy is not None else None,
    }


def bundle_to_dict(bundle: ReportBundle) -> dict[str, Any]:
    manifest = bundle.manifest
    return {
        "schema": REPORT_SCHEMA,
        "run": {
            "command": manifest.command,
            "dataset_path": manifest.dataset_path,
            "dataset_digest": manifest.dataset_digest,
            "backend_id": manifest.backend_id,
            "metric_config": manifest.metric_config,
            "methods": list(manifest.methods),
            "rng_seed": manifest.rng_seed,
        },
        "agreement": [cell_to_dict(c) for c in bundle.table.cells] if bundle.table else None,
        "records": [metric_report_to_dict(r) for r in bundle.reports],
        "instances": [o.to_dict() for o in bundle.instance_log],
        "failures": bundle.failure_summary,
        "failure_rate": bundle.failure_rate,
    }


def _format_accuracy(cell: AgreementCell | None) -> str:
    if cell is None or cell.accuracy is None:
        return "n/a"
    return f"{float(cell.accuracy):.2f}"


def _table_dimensions(table: AgreementTable) -> List[Dimension]:
    return [d for d in Dimension if any(c.dimension is d for c in table.cells)]


def agreement_markdown(table: AgreementTable, label_sources: Iterable[str] = ()) -> str:
    """Methods as rows, dimensions as columns."""
    dimensions = _table_dimensions(table)
    lines = [
        "| | " + " | ".join(d.label for d in dimensions) + " |",
        "|---|" + "---|" * len(dimensions),
    ]
    for method in table.methods:
        row = [_format_accuracy(table.cell(d, method)) for d in dimensions]
        lines.append(f"| {method.label} | " + " | ".join(row) + " |")

    lines.append("")
    for method in table.methods:
        counts = []
        for dimension in dimensions:
            cell = table.cell(dimension, method)
            if cell is not None:
                counts.append(
                    f"{dimension.label} {cell.n_agreements}/{cell.n_instances}"
                    + (f" ({cell.n_unevaluable} unevaluable)" if cell.n_unevaluable else "")
                )
        lines.append(f"- {method.label}: " + ", ".join(counts))

    if "construction-implied" in set(label_sources):
        lines.append("")
        lines.append(
            "_Some preferences are construction-implied (no human label in the dataset)._"
        )
    return "\n".join(lines) + "\n"


def _score_cell(outcome) -> str:
    if isinstance(outcome, MetricFailure):
        return ""
    return repr(float(outcome.score))


def scores_markdown(reports: List[MetricReport]) -> str:
    lines = [
        "| Record | Faithfulness | Answer relevance | Context relevance |",
        "|---|---|---|---|",
    ]
    for report in reports:
        cells = []
        for name in METRICS:
            outcome = getattr(report, name)
            cells.append(
                f"failed ({outcome.error_type})"
                if isinstance(outcome, MetricFailure)
                else f"{float(outcome.score):.3f}"
            )
        lines.append(f"| {report.record_id} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def _write_agreement_csv(table: AgreementTable, path: Path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["method", "dimension", "accuracy", "n_agreements", "n_instances", "n_unevaluable"]
        )
        for cell in table.cells:
            accuracy = cell.accuracy
            writer.writerow(
                [
                    cell.method.value,
                    cell.dimension.value,
                    "" if accuracy is None else repr(float(accuracy)),
                    cell.n_agreements,
                    cell.n_instances,
                    cell.n_unevaluable,
                ]
            )


def _write_scores_csv(reports: List[MetricReport], path: Path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["record_id", *METRICS, "failures"])
        for report in reports:
            writer.writerow(
                [
                    report.record_id,
                    *(_score_cell(getattr(report, name)) for name in METRICS),
                    ";".join(f"{f.metric}:{f.error_type}" for f in report.failures),
                ]
            )


def write_manifest(manifest: RunManifest, out_dir: Path) -> Path:
    path = Path(out_dir) / MANIFEST_JSON
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def emit_report(bundle: ReportBundle, formats: Iterable[ReportFormat], out_dir: Path) -> List[Path]:
    """Writes the requested formats and returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    formats = set(formats)
    written: List[Path] = []

    if ReportFormat.JSON in formats:
        path = out_dir / REPORT_JSON
        path.write_text(
            json.dumps(bundle_to_dict(bundle), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        written.append(path)

    if ReportFormat.CSV in formats:
        if bundle.table is not None:
            path = out_dir / AGREEMENT_CSV
            _write_agreement_csv(bundle.table, path)
            written.append(path)
        if bundle.reports:
            path = out_dir / SCORES_CSV
            _write_scores_csv(bundle.reports, path)
            written.append(path)

    if ReportFormat.MARKDOWN in formats:
        if bundle.table is not None:
            path = out_dir / AGREEMENT_MD
            sources = (o.label_source.value for o in bundle.instance_log)
            path.write_text(agreement_markdown(bundle.table, sources), encoding="utf-8")
            written.append(path)
        if bundle.reports:
            path = out_dir / SCORES_MD
            path.write_text(scores_markdown(bundle.reports), encoding="utf-8")
            written.append(path)

    for path in written:
        logger.info("Wrote %s", path)
    return written
