from pathlib import Path

import typer
from rich.console import Console

from rageval.cli.commands.common import EXIT_FAILURES, EXIT_OK, load_or_fail, open_gateway
from rageval.core.builder import DatasetBuilder
from rageval.core.dataset import load_documents
from rageval.models.settings import Settings
from rageval.utils.evaluation_flow import build_flow

DATASET_FILE = "wikieval.jsonl"


def build_command(
    documents_path: Path,
    settings: Settings,
    ctx: typer.Context,
    console: Console,
    output: Path | None = None,
    scripted: Path | None = None,
) -> int:
    console.print(f"   [dim]Building a dataset from {documents_path}[/dim]\n")

    documents = load_or_fail(load_documents, documents_path, console)
    if not documents:
        console.print("[bold yellow]No source documents found.[/bold yellow]")
        return EXIT_OK

    out_path = output or settings.run.out_dir / DATASET_FILE
    gateway = open_gateway(settings, console, scripted)
    builder = DatasetBuilder(gateway, settings.metrics)
    summary = build_flow(builder, documents, out_path, console)

    for doc_id, message in summary.failures.items():
        console.print(f"   [red]{doc_id}[/red]: {message}")
    flagged = [r.id for r in summary.records if r.review_flags]
    if flagged:
        console.print(f"[yellow]⚠️ Flagged for review: {', '.join(flagged)}[/yellow]")

    console.print(f"\n[bold green]✅ Wrote {len(summary.records)} records to '{out_path}'.[/bold green]")

    rate = len(summary.failures) / len(documents)
    return EXIT_FAILURES if rate > settings.run.failure_threshold else EXIT_OK
