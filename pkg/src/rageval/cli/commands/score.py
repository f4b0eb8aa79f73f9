from pathlib import Path

import typer
from rich.console import Console

from rageval.cli.commands.common import (
    finish_run,
    load_or_fail,
    new_manifest,
    open_gateway,
    print_scores,
)
from rageval.core.dataset import load_triples
from rageval.core.harness import EvaluationRunner
from rageval.models.run import ReportBundle
from rageval.models.settings import Settings
from rageval.utils.evaluation_flow import score_flow


def score_command(
    dataset: Path,
    settings: Settings,
    ctx: typer.Context,
    console: Console,
    scripted: Path | None = None,
    scripted_backend_id: str = "scripted",
) -> int:
    console.print(f"   [dim]Scoring triples from {dataset}[/dim]\n")

    records = load_or_fail(load_triples, dataset, console)
    gateway = open_gateway(settings, console, scripted, scripted_backend_id)
    manifest = new_manifest("score", dataset, settings, gateway)

    runner = EvaluationRunner(gateway, settings.metrics)
    reports = score_flow(runner, records, console)
    if reports:
        print_scores(reports, console)

    bundle = ReportBundle(manifest=manifest, reports=reports)
    return finish_run(bundle, settings, gateway, console)
