"""The `obs` command line: pipeline runs, issue round-trips, exports, serving.

Exit codes: 0 success, 1 config error, 2 pipeline error, 3 unresolved
conflicts remain under --strict.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import pipeline, storage
from .config import load_config
from .disambiguate import MergedTool
from .errors import ConfigError, ObservatoryError
from .exporters import EXPORT_FORMATS

EXIT_CONFIG = 1
EXIT_PIPELINE = 2
EXIT_CONFLICTS = 3


@click.group()
def main():
    """Software metadata observatory."""


def _load_config_or_exit(config_path: str):
    try:
        return load_config(config_path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option(
    "--stages",
    multiple=True,
    type=click.Choice(pipeline.STAGES),
    help="Subset of stages to run (default: all, in order).",
)
@click.option("--strict", is_flag=True, help="Fail when unresolved conflicts remain.")
def run(config_path: str, stages: tuple[str, ...], strict: bool):
    """Run the pipeline end to end (or a subset of stages)."""
    config = _load_config_or_exit(config_path)
    try:
        report = pipeline.run(config, stages or pipeline.STAGES, strict=strict)
    except pipeline.UnresolvedConflicts as exc:
        click.echo(f"unresolved conflicts remain: {exc}", err=True)
        sys.exit(EXIT_CONFLICTS)
    except ObservatoryError as exc:
        click.echo(f"pipeline error: {exc}", err=True)
        sys.exit(EXIT_PIPELINE)
    click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))


@main.group()
def issues():
    """Export escalated blocks for review / apply decision files."""


@issues.command("export")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--dir", "out_dir", type=click.Path(), default=None,
              help="Target directory (default: <state_dir>/issues).")
def issues_export(config_path: str, out_dir: str | None):
    config = _load_config_or_exit(config_path)
    try:
        written = pipeline.export_issues(config, out_dir)
    except ObservatoryError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_PIPELINE)
    for path in written:
        click.echo(str(path))
    click.echo(f"exported {len(written)} issue document(s)")


@issues.command("apply")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--dir", "decisions_dir", required=True, type=click.Path(exists=True))
def issues_apply(config_path: str, decisions_dir: str):
    config = _load_config_or_exit(config_path)
    try:
        applied = pipeline.apply_decisions(config, decisions_dir)
    except ObservatoryError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_PIPELINE)
    click.echo(f"applied {applied} decision(s)")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--tool", "tool_id", required=True)
@click.option("--format", "format_", required=True, type=click.Choice(sorted(EXPORT_FORMATS)))
@click.option("--output", type=click.Path(), default=None, help="Write to file instead of stdout.")
def export(config_path: str, tool_id: str, format_: str, output: str | None):
    """Export one merged tool as CFF or JSON-LD."""
    config = _load_config_or_exit(config_path)
    layers = pipeline.Layers(config.state_dir)
    if not layers.merged.exists():
        click.echo("error: merged layer missing; run the pipeline first", err=True)
        sys.exit(EXIT_PIPELINE)
    tools = {
        d["tool_id"]: MergedTool.from_dict(d)
        for d in storage.read_records(layers.merged, storage.MERGED_SCHEMA)
    }
    tool = tools.get(tool_id)
    if tool is None:
        click.echo(f"error: unknown tool {tool_id!r}", err=True)
        sys.exit(EXIT_PIPELINE)
    try:
        content = EXPORT_FORMATS[format_](tool)
    except ObservatoryError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_PIPELINE)
    if output:
        Path(output).write_text(content, encoding="utf-8")
        click.echo(output)
    else:
        click.echo(content, nl=False)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
def serve(config_path: str):
    """Serve the HTTP API (and the UI, when a built bundle is configured)."""
    import uvicorn

    from .api import Snapshot, create_app

    config = _load_config_or_exit(config_path)
    layers = pipeline.Layers(config.state_dir)
    snapshot = Snapshot.load(config.state_dir) if layers.merged.exists() else None
    app = create_app(config, snapshot)
    host, _, port = config.bind.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8080))


@main.command("validate-config")
@click.option("--config", "config_path", required=True, type=click.Path())
def validate_config_cmd(config_path: str):
    """Validate a run config and exit."""
    _load_config_or_exit(config_path)
    click.echo("config ok")


if __name__ == "__main__":
    main()
