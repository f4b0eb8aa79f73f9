from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping

import typer
from rich.console import Console
from rich.table import Table

from rageval.config import ConfigManager
from rageval.core.dataset import file_digest
from rageval.core.report import emit_report, write_manifest
from rageval.models.records import AgreementTable
from rageval.models.run import MetricFailure, MetricReport, ReportBundle, RunManifest
from rageval.models.settings import Settings
from rageval.services.llm_gateway import LlmGateway, create_gateway
from rageval.utils.enumerators import ContextEnum, Dimension
from rageval.utils.exceptions import ConfigurationError, DatasetError

TRANSCRIPT_FILE = "transcript.jsonl"

EXIT_OK = 0
EXIT_FAILURES = 1
EXIT_CONFIG = 2


def fail(console: Console, message: str, code: int = EXIT_CONFIG):
    console.print(f"[bold red]❌ {message}[/bold red]")
    raise typer.Exit(code=code)


def resolve_settings(ctx: typer.Context, overrides: Mapping[str, Any], console: Console) -> Settings:
    config: ConfigManager = ctx.obj[ContextEnum.CONFIG]
    try:
        config.validate_config()
        settings = config.resolve(overrides)
    except ConfigurationError as error:
        fail(console, str(error))
    ctx.obj[ContextEnum.SETTINGS] = settings
    return settings


def load_or_fail(loader, path: Path, console: Console):
    if not Path(path).exists():
        fail(console, f"File not found: {path}")
    try:
        return loader(path)
    except DatasetError as error:
        fail(console, f"{path}: {error}")


def open_gateway(
    settings: Settings,
    console: Console,
    scripted: Path | None = None,
    scripted_backend_id: str = "scripted",
) -> LlmGateway:
    """Gateway recording every exchange into the run's transcript."""
    out_dir = settings.run.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    transcript = out_dir / TRANSCRIPT_FILE
    # a fresh run starts a fresh transcript, unless it replays from that very file
    if transcript.exists() and (scripted is None or Path(scripted).resolve() != transcript.resolve()):
        transcript.unlink()

    try:
        return create_gateway(
            settings.backend,
            scripted_transcript=scripted,
            scripted_backend_id=scripted_backend_id,
            record_to=transcript,
        )
    except ConfigurationError as error:
        fail(console, str(error))
    except (OSError, ValueError) as error:
        fail(console, f"Cannot read transcript {scripted}: {error}")


def new_manifest(
    command: str, dataset: Path, settings: Settings, gateway: LlmGateway
) -> RunManifest:
    return RunManifest(
        command=command,
        dataset_path=str(dataset),
        dataset_digest=file_digest(dataset),
        backend_id=gateway.backend_id,
        backend_config_digest=settings.backend.digest(),
        metric_config=settings.metrics.to_dict(),
        methods=[m.value for m in settings.run.methods],
        rng_seed=settings.metrics.rng_seed,
        started_at=_now(),
        transcript=TRANSCRIPT_FILE,
    )


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def print_agreement_table(table: AgreementTable, console: Console):
    dimensions = [d for d in Dimension if any(c.dimension is d for c in table.cells)]
    rich_table = Table(title="Agreement with human preferences")
    rich_table.add_column("Method", style="bold")
    for dimension in dimensions:
        rich_table.add_column(dimension.label, justify="right")

    for method in table.methods:
        row = []
        for dimension in dimensions:
            cell = table.cell(dimension, method)
            if cell is None or cell.accuracy is None:
                row.append("n/a")
            else:
                row.append(f"{float(cell.accuracy):.2f} [dim]({cell.n_agreements}/{cell.n_instances})[/dim]")
        rich_table.add_row(method.label, *row)
    console.print(rich_table)


def print_scores(reports: list[MetricReport], console: Console):
    rich_table = Table(title="Scores")
    rich_table.add_column("Record", style="bold")
    for name in ("Faithfulness", "Answer relevance", "Context relevance"):
        rich_table.add_column(name, justify="right")

    for report in reports:
        cells = []
        for outcome in (report.faithfulness, report.answer_relevance, report.context_relevance):
            if isinstance(outcome, MetricFailure):
                cells.append(f"[red]{outcome.error_type}[/red]")
            else:
                cells.append(f"{float(outcome.score):.3f}")
        rich_table.add_row(report.record_id, *cells)
    console.print(rich_table)


def finish_run(
    bundle: ReportBundle, settings: Settings, gateway: LlmGateway, console: Console
) -> int:
    """Writes reports and the manifest; returns the exit code for the failure rate."""
    manifest = bundle.manifest
    manifest.finished_at = _now()
    manifest.token_usage = {
        "prompt_tokens": gateway.stats.prompt_tokens,
        "completion_tokens": gateway.stats.completion_tokens,
        "network_calls": gateway.stats.network_calls,
        "cache_hits": gateway.stats.cache_hits,
        "retries": gateway.stats.retries,
    }
    manifest.instance_log = [o.to_dict() for o in bundle.instance_log]

    out_dir = settings.run.out_dir
    with console.status("[bold blue]📄 Writing reports...", spinner="dots"):
        written = emit_report(bundle, settings.run.formats, out_dir)
        written.append(write_manifest(manifest, out_dir))

    for path in written:
        console.print(f"   [dim]{path}[/dim]")

    rate = bundle.failure_rate
    if rate > settings.run.failure_threshold:
        console.print(
            f"[bold yellow]⚠️ Failure rate {rate:.1%} exceeds the threshold "
            f"{settings.run.failure_threshold:.1%}.[/bold yellow]"
        )
        for key, count in bundle.failure_summary.items():
            console.print(f"   {key}: {count}")
        return EXIT_FAILURES

    console.print("\n[bold green]✅ Run complete.[/bold green]")
    return EXIT_OK
