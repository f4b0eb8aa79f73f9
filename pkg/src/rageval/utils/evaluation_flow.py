from pathlib import Path
from typing import List, Sequence

from rich.console import Console
from rich.progress import (
    BarColumn,
    Progress,
    SpinnerColumn,
    TextColumn,
    TimeElapsedColumn,
)

from rageval.core.builder import BuildSummary, DatasetBuilder
from rageval.core.harness import AgreementRun, EvaluationRunner
from rageval.models.dataset import SourceDocument
from rageval.models.records import EvalRecord, PairwiseInstance
from rageval.models.run import MetricReport
from rageval.utils.enumerators import Method


def _progress(console: Console) -> Progress:
    return Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TextColumn("[bold blue]{task.completed} of {task.total}"),
        TimeElapsedColumn(),
        console=console,
        transient=True,
    )


def score_flow(
    runner: EvaluationRunner, records: Sequence[EvalRecord], console: Console
) -> List[MetricReport]:
    with _progress(console) as progress:
        task = progress.add_task("[bold green]Scoring records...", total=len(records))
        reports = runner.score_records(records, on_progress=lambda: progress.advance(task))

    failed = sum(1 for r in reports if r.failed)
    console.print(f"[bold]🔍 Scored {len(reports)} records[/bold] ({failed} with failures).")
    return reports


def agreement_flow(
    runner: EvaluationRunner,
    instances: Sequence[PairwiseInstance],
    methods: Sequence[Method],
    console: Console,
) -> AgreementRun:
    with _progress(console) as progress:
        task = progress.add_task(
            "[bold green]Judging pairs...", total=len(instances) * len(methods)
        )
        run = runner.run_agreement(instances, methods, on_progress=lambda: progress.advance(task))

    unevaluable = sum(1 for o in run.outcomes if not o.evaluable)
    console.print(
        f"[bold]🔍 Judged {len(run.outcomes)} instance/method pairs[/bold] ({unevaluable} unevaluable)."
    )
    return run


def build_flow(
    builder: DatasetBuilder,
    documents: Sequence[SourceDocument],
    out_path: Path,
    console: Console,
) -> BuildSummary:
    with _progress(console) as progress:
        task = progress.add_task("[bold green]Building records...", total=len(documents))
        summary = builder.build_dataset(
            documents, out_path, on_progress=lambda: progress.advance(task)
        )

    console.print(
        f"[bold]🔍 Built {len(summary.records)} records[/bold] ({len(summary.failures)} failed)."
    )
    return summary
