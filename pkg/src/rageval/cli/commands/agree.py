from pathlib import Path

import typer
from rich.console import Console

from rageval.cli.commands.common import (
    finish_run,
    load_or_fail,
    new_manifest,
    open_gateway,
    print_agreement_table,
)
from rageval.core.dataset import load_dataset
from rageval.core.harness import EvaluationRunner
from rageval.models.run import ReportBundle
from rageval.models.settings import Settings
from rageval.utils.evaluation_flow import agreement_flow


def agree_command(
    dataset: Path,
    settings: Settings,
    ctx: typer.Context,
    console: Console,
    scripted: Path | None = None,
    scripted_backend_id: str = "scripted",
) -> int:
    methods = settings.run.methods
    console.print(
        f"   [dim]Agreement run on {dataset} with {', '.join(m.label for m in methods)}[/dim]\n"
    )

    instances = load_or_fail(load_dataset, dataset, console)
    gateway = open_gateway(settings, console, scripted, scripted_backend_id)
    manifest = new_manifest("agree", dataset, settings, gateway)

    runner = EvaluationRunner(gateway, settings.metrics)
    run = agreement_flow(runner, instances, methods, console)
    print_agreement_table(run.table, console)

    bundle = ReportBundle(manifest=manifest, table=run.table, instance_log=run.outcomes)
    return finish_run(bundle, settings, gateway, console)
