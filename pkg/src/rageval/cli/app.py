import logging
import time
from pathlib import Path
from typing import Any

import typer
from prompt_toolkit import prompt
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.text import Text

from rageval.cli.commands.agree import agree_command
from rageval.cli.commands.build import build_command
from rageval.cli.commands.common import EXIT_CONFIG, resolve_settings
from rageval.cli.commands.replay import replay_command
from rageval.cli.commands.score import score_command
from rageval.config import ConfigManager
from rageval.models.llm import DEFAULT_API_KEY_ENV, DEFAULT_BASE_URL
from rageval.models.settings import DEFAULT_EMBED_MODEL, DEFAULT_JUDGE_MODEL
from rageval.services.response_cache import ResponseCache
from rageval.utils.enumerators import ContextEnum, Method, ReportFormat
from rageval.utils.exceptions import ConfigurationError

app = typer.Typer(pretty_exceptions_show_locals=False)
console = Console()


def _parse_methods(raw: str | None) -> list[Method] | None:
    if raw is None:
        return None
    try:
        methods = Method.parse_list(raw)
    except ValueError:
        raise typer.BadParameter(
            f"methods must be a comma-separated subset of {', '.join(m.value for m in Method)}"
        )
    if not methods:
        raise typer.BadParameter("at least one method is required")
    return methods


def _parse_formats(raw: str | None) -> list[ReportFormat] | None:
    if raw is None:
        return None
    try:
        return ReportFormat.parse_list(raw)
    except ValueError:
        raise typer.BadParameter("formats must be a comma-separated subset of json, csv, md")


def _overrides(**flags: Any) -> dict[str, Any]:
    """Flag values keyed like the config file; unset flags stay None."""
    if flags.pop("no_cache", False):
        flags["cache_enabled"] = False
    return flags


@app.command()
def score(
    ctx: typer.Context,
    dataset: Path = typer.Option(..., "--dataset", "-d", help="JSONL file of question/context/answer triples."),
    backend_url: str = typer.Option(None, "--backend-url", help="OpenAI-compatible base URL."),
    judge_model: str = typer.Option(None, "--judge-model", help="Chat model used for judging."),
    embed_model: str = typer.Option(None, "--embed-model", help="Embedding model for answer relevance."),
    n_questions: int = typer.Option(None, "--n-questions", help="Questions generated per answer."),
    seed: int = typer.Option(None, "--seed", help="Seed for tie-breaking."),
    cache_dir: Path = typer.Option(None, "--cache-dir", help="Response cache directory."),
    no_cache: bool = typer.Option(False, "--no-cache", help="Disable the response cache."),
    out: Path = typer.Option(None, "--out", "-o", help="Output directory."),
    formats: str = typer.Option(None, "--formats", help="Report formats, e.g. json,csv,md."),
    concurrency: int = typer.Option(None, "--concurrency", help="Maximum in-flight requests."),
    failure_threshold: float = typer.Option(None, "--failure-threshold", help="Tolerated failure rate before exiting with 1."),
    scripted: Path = typer.Option(None, "--scripted", help="Answer from a recorded transcript instead of the network."),
):
    """
    Scores question/context/answer triples on faithfulness, answer relevance and context relevance.
    """
    settings = resolve_settings(
        ctx,
        _overrides(
            base_url=backend_url,
            judge_model=judge_model,
            embed_model=embed_model,
            n_questions=n_questions,
            seed=seed,
            cache_dir=cache_dir,
            no_cache=no_cache,
            out=out,
            formats=_parse_formats(formats),
            concurrency=concurrency,
            failure_threshold=failure_threshold,
        ),
        console,
    )
    raise typer.Exit(code=score_command(dataset, settings, ctx, console, scripted=scripted))


@app.command()
def agree(
    ctx: typer.Context,
    dataset: Path = typer.Option(..., "--dataset", "-d", help="WikiEval-format JSONL dataset."),
    methods: str = typer.Option(None, "--methods", "-m", help="Comma-separated: ragas, gpt-score, gpt-ranking."),
    backend_url: str = typer.Option(None, "--backend-url", help="OpenAI-compatible base URL."),
    judge_model: str = typer.Option(None, "--judge-model", help="Chat model used for judging."),
    embed_model: str = typer.Option(None, "--embed-model", help="Embedding model for answer relevance."),
    n_questions: int = typer.Option(None, "--n-questions", help="Questions generated per answer."),
    seed: int = typer.Option(None, "--seed", help="Seed for tie-breaking."),
    cache_dir: Path = typer.Option(None, "--cache-dir", help="Response cache directory."),
    no_cache: bool = typer.Option(False, "--no-cache", help="Disable the response cache."),
    out: Path = typer.Option(None, "--out", "-o", help="Output directory."),
    formats: str = typer.Option(None, "--formats", help="Report formats, e.g. json,csv,md."),
    concurrency: int = typer.Option(None, "--concurrency", help="Maximum in-flight requests."),
    failure_threshold: float = typer.Option(None, "--failure-threshold", help="Tolerated unevaluable rate before exiting with 1."),
    scripted: Path = typer.Option(None, "--scripted", help="Answer from a recorded transcript instead of the network."),
):
    """
    Measures how often each method prefers the same candidate as the human annotators.
    """
    settings = resolve_settings(
        ctx,
        _overrides(
            methods=_parse_methods(methods),
            base_url=backend_url,
            judge_model=judge_model,
            embed_model=embed_model,
            n_questions=n_questions,
            seed=seed,
            cache_dir=cache_dir,
            no_cache=no_cache,
            out=out,
            formats=_parse_formats(formats),
            concurrency=concurrency,
            failure_threshold=failure_threshold,
        ),
        console,
    )
    raise typer.Exit(code=agree_command(dataset, settings, ctx, console, scripted=scripted))


@app.command()
def build(
    ctx: typer.Context,
    documents: Path = typer.Option(..., "--documents", "-d", help="JSONL file of source documents."),
    output: Path = typer.Option(None, "--output", help="Dataset file to write (default: <out>/wikieval.jsonl)."),
    backend_url: str = typer.Option(None, "--backend-url", help="OpenAI-compatible base URL."),
    judge_model: str = typer.Option(None, "--judge-model", help="Chat model used for generation."),
    cache_dir: Path = typer.Option(None, "--cache-dir", help="Response cache directory."),
    no_cache: bool = typer.Option(False, "--no-cache", help="Disable the response cache."),
    out: Path = typer.Option(None, "--out", "-o", help="Output directory."),
    concurrency: int = typer.Option(None, "--concurrency", help="Maximum in-flight requests."),
    failure_threshold: float = typer.Option(None, "--failure-threshold", help="Tolerated failed-document rate before exiting with 1."),
    scripted: Path = typer.Option(None, "--scripted", help="Answer from a recorded transcript instead of the network."),
):
    """
    Builds a WikiEval-format dataset (question, three answers, two contexts) from source documents.
    """
    settings = resolve_settings(
        ctx,
        _overrides(
            base_url=backend_url,
            judge_model=judge_model,
            cache_dir=cache_dir,
            no_cache=no_cache,
            out=out,
            concurrency=concurrency,
            failure_threshold=failure_threshold,
        ),
        console,
    )
    raise typer.Exit(
        code=build_command(documents, settings, ctx, console, output=output, scripted=scripted)
    )


@app.command()
def replay(
    ctx: typer.Context,
    manifest: Path = typer.Option(..., "--manifest", help="manifest.json of the run to replay."),
    transcript: Path = typer.Option(None, "--transcript", help="Transcript to answer from (default: next to the manifest)."),
    out: Path = typer.Option(..., "--out", "-o", help="Output directory for the replayed run."),
    formats: str = typer.Option(None, "--formats", help="Report formats, e.g. json,csv,md."),
    failure_threshold: float = typer.Option(None, "--failure-threshold", help="Tolerated failure rate before exiting with 1."),
):
    """
    Re-runs a recorded score or agree run offline from its transcript.
    """
    settings = resolve_settings(
        ctx,
        _overrides(formats=_parse_formats(formats), failure_threshold=failure_threshold),
        console,
    )
    raise typer.Exit(code=replay_command(manifest, transcript, out, settings, ctx, console))


@app.command()
def config(ctx: typer.Context):
    """
    Guides the user through setting up the judge backend and default models.
    """
    console.print(Panel.fit("[bold cyan]Welcome to the RagEval Setup Wizard! ✨[/bold cyan]"))
    console.print("Let's get you set up in a few simple steps.\n")

    security_message = Text.from_markup(
        "• [bold green]API Key:[/bold green] Judging calls an OpenAI-compatible API, which needs a key.\n"
        "• [bold green]Secure Storage:[/bold green] The key is stored in your operating system's native keychain, never in the config file.\n"
        "• [bold green]Environment First:[/bold green] If the key's environment variable is set, it takes precedence over the stored key."
    )
    console.print(
        Panel(
            security_message,
            title="[bold]🔒 Security Overview[/bold]",
            border_style="yellow",
            padding=(1, 2),
        )
    )
    console.print()

    console.print("[u bold]Step 1: Backend[/u bold]")
    base_url = typer.prompt("   🌐 Base URL", default=DEFAULT_BASE_URL)
    api_key_env = typer.prompt("   🏷️  API key variable", default=DEFAULT_API_KEY_ENV)
    api_key = prompt("   🔑 API KEY (leave empty to keep using the environment): ", is_password=True)
    console.print("✅ Backend entered.\n")

    console.print("[u bold]Step 2: Models[/u bold]")
    judge_model = typer.prompt("   🤖 Judge model", default=DEFAULT_JUDGE_MODEL)
    embed_model = typer.prompt("   📐 Embedding model", default=DEFAULT_EMBED_MODEL)
    console.print("✅ Models selected.\n")

    config_manager: ConfigManager = ctx.obj[ContextEnum.CONFIG]
    with console.status("[bold green]Saving configuration securely...", spinner="dots"):
        config_manager.save(
            {
                "base_url": base_url,
                "api_key_env": api_key_env,
                "judge_model": judge_model,
                "embed_model": embed_model,
            },
            api_key=api_key or None,
        )
        time.sleep(0.5)
    console.print(f"✅ Configuration saved to {config_manager.config_file}")
    console.print("\n[bold green]🎉 All done! You can now run `rageval score` or `rageval agree`.[/bold green]")


@app.command()
def clean(
    ctx: typer.Context,
    cache: bool = typer.Option(False, "--cache", help="Also delete the response cache."),
    yes: bool = typer.Option(False, "--yes", "-y", help="Do not ask for confirmation."),
):
    """
    Deletes stored user data: the configuration file, the stored API key and optionally the response cache.
    """
    confirm_message = Text.from_markup(
        "[bold yellow]This will delete all stored user data, including:[/bold yellow]\n"
        "• Your saved API key from the system keychain.\n"
        "• Your saved configuration (backend, models, run defaults)."
        + ("\n• The cached model responses." if cache else "")
    )
    console.print(
        Panel(confirm_message, title="[bold]WARNING[/bold]", border_style="yellow", padding=(1, 2))
    )

    if not yes and console.input(
        "\n[bold red]Are you sure you want to continue? (y/N): [/bold red]"
    ).lower() != "y":
        console.print("[green]Cleanup aborted by user.[/green]")
        return

    config_manager: ConfigManager = ctx.obj[ContextEnum.CONFIG]
    try:
        settings = config_manager.resolve({})
    except ConfigurationError:
        settings = None

    if cache and settings is not None and settings.backend.cache_dir is not None:
        removed = ResponseCache(settings.backend.cache_dir).clear()
        console.print(f"🗑️ {removed} cached responses deleted.")

    api_key_env = settings.backend.api_key_env if settings else DEFAULT_API_KEY_ENV
    config_manager.clean(console, api_key_env)
    console.print("\n[bold green]✅ Cleanup complete.[/bold green]")


def _setup_logging(verbose: bool, debug: bool):
    level = logging.DEBUG if debug else logging.INFO if verbose else logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )
    # HTTP client chatter is only useful when debugging
    for noisy in ("httpx", "openai"):
        logging.getLogger(noisy).setLevel(logging.DEBUG if debug else logging.WARNING)


@app.callback()
def main_callback(
    ctx: typer.Context,
    config_file: Path = typer.Option(None, "--config", help="Config file to use instead of the default one."),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log progress details."),
    debug: bool = typer.Option(False, "--debug", help="Log everything, including HTTP traffic."),
):
    """
    RagEval: reference-free evaluation of retrieval augmented generation pipelines.
    """
    ctx.ensure_object(dict)
    _setup_logging(verbose, debug)

    if config_file is not None and not config_file.exists() and ctx.invoked_subcommand != "config":
        console.print(f"[bold red]Config file not found: {config_file}[/bold red]")
        raise typer.Exit(code=EXIT_CONFIG)

    try:
        ctx.obj[ContextEnum.CONFIG] = ConfigManager(config_file).load()
    except ConfigurationError as error:
        if ctx.invoked_subcommand in ("config", "clean"):
            # a broken file can still be overwritten or deleted
            ctx.obj[ContextEnum.CONFIG] = ConfigManager(config_file)
            return
        console.print(f"[bold red]{error}[/bold red]")
        raise typer.Exit(code=EXIT_CONFIG)


def cli_main(argv: list[str] | None = None) -> int:
    """
    Runs the CLI and returns its exit code instead of exiting. Usage errors,
    aborts and typer.Exit all end in SystemExit, whichever click typer uses.
    """
    try:
        app(args=argv, prog_name="rageval")
    except SystemExit as exit_:
        if exit_.code is None:
            return 0
        return exit_.code if isinstance(exit_.code, int) else 1
    return 0


if __name__ == "__main__":
    app()
