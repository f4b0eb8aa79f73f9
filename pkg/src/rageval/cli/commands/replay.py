import dataclasses
import json
from pathlib import Path

import typer
from rich.console import Console

from rageval.cli.commands.agree import agree_command
from rageval.cli.commands.common import fail
from rageval.cli.commands.score import score_command
from rageval.core.dataset import file_digest
from rageval.models.run import RunManifest
from rageval.models.settings import MetricConfig, Settings
from rageval.utils.enumerators import Method
from rageval.utils.exceptions import ReplayError


def read_manifest(path: Path) -> RunManifest:
    try:
        return RunManifest.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as error:
        raise ReplayError(f"Cannot read manifest {path}: {error}")


def replay_settings(manifest: RunManifest, settings: Settings, out_dir: Path) -> Settings:
    """The recorded metric config and methods, the current backend limits, a new out dir."""
    try:
        metrics = MetricConfig(**manifest.metric_config)
        methods = tuple(Method(m) for m in manifest.methods) or settings.run.methods
    except (TypeError, ValueError) as error:
        raise ReplayError(f"Manifest has an invalid metric config: {error}")

    run = dataclasses.replace(settings.run, methods=methods, out_dir=out_dir)
    return Settings(backend=settings.backend, metrics=metrics, run=run)


def replay_command(
    manifest_path: Path,
    transcript: Path | None,
    out_dir: Path,
    settings: Settings,
    ctx: typer.Context,
    console: Console,
) -> int:
    """Re-runs a recorded score or agree run against its transcript, offline."""
    try:
        manifest = read_manifest(manifest_path)
        replayed = replay_settings(manifest, settings, out_dir)
    except ReplayError as error:
        fail(console, str(error))

    transcript = transcript or Path(manifest_path).parent / manifest.transcript
    if not transcript.exists():
        fail(console, f"Transcript not found: {transcript}")

    dataset = Path(manifest.dataset_path)
    if not dataset.exists():
        fail(console, f"Recorded dataset not found: {dataset}")
    if file_digest(dataset) != manifest.dataset_digest:
        fail(console, f"Dataset {dataset} changed since the run was recorded.")

    console.print(f"   [dim]Replaying '{manifest.command}' from {transcript}[/dim]")
    if manifest.command == "score":
        command = score_command
    elif manifest.command == "agree":
        command = agree_command
    else:
        fail(console, f"Cannot replay a '{manifest.command}' run.")

    return command(
        dataset,
        replayed,
        ctx,
        console,
        scripted=transcript,
        scripted_backend_id=manifest.backend_id,
    )
