"""Command-line experiment runner.

Subcommands: ``run`` (execute a spec file into an output bundle),
``validate`` (schema diagnostics only) and ``list-kinds``.  Exit codes:
0 success, 1 validation failure, 2 runtime failure.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import yaml

from . import __version__
from .experiments import EXPERIMENT_KINDS, SpecError, run as run_experiment, validate


@click.group()
@click.version_option(version=__version__, prog_name="flipflopsim")
def main():
    """Virtual experiments on a donor flip-flop qubit."""


def _load(spec_file: str):
    try:
        return yaml.safe_load(Path(spec_file).read_text())
    except (OSError, yaml.YAMLError) as exc:
        click.echo(f"error: cannot read spec: {exc}", err=True)
        sys.exit(1)


@main.command("run")
@click.argument("spec_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "-o", "output_dir", default="results",
              type=click.Path(file_okay=False), help="Output bundle directory.")
@click.option("--jobs", "-j", default=1, show_default=True,
              help="Parallelism degree (results are identical for any value).")
def run_cmd(spec_file, output_dir, jobs):
    """Run the experiment described by SPEC_FILE."""
    doc = _load(spec_file)
    errors = validate(doc)
    if errors:
        for e in errors:
            click.echo(f"invalid: {e}", err=True)
        sys.exit(1)
    del jobs  # sweeps are cheap enough to run inline; flag kept for scripts
    try:
        bundle = run_experiment(doc)
    except SpecError as exc:
        for e in exc.diagnostics:
            click.echo(f"invalid: {e}", err=True)
        sys.exit(1)
    except Exception as exc:
        click.echo(f"runtime error ({doc.get('kind')}): {exc}", err=True)
        sys.exit(2)
    label = doc.get("label") or doc["kind"]
    out = bundle.write(Path(output_dir) / label)
    click.echo(f"wrote {out / 'data.csv'}")
    click.echo(f"wrote {out / 'metadata.json'}")
    for key, value in bundle.summary.items():
        click.echo(f"  {key}: {value}")


@main.command("validate")
@click.argument("spec_file", type=click.Path(exists=True, dir_okay=False))
def validate_cmd(spec_file):
    """Validate SPEC_FILE against the experiment schema."""
    doc = _load(spec_file)
    errors = validate(doc)
    if errors:
        for e in errors:
            click.echo(e)
        sys.exit(1)
    click.echo("ok")


@main.command("list-kinds")
def list_kinds_cmd():
    """List the supported experiment kinds."""
    for kind in EXPERIMENT_KINDS:
        click.echo(kind)


if __name__ == "__main__":
    main()
