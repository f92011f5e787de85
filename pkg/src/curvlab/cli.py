"""``curvlab`` command line: run a gallery, classify one case, list what is available."""

from __future__ import annotations

import csv
import io
import json
import sys

import click

from .audits import ASSERTABLE, AUDITS
from .chart_lab import CHART_KINDS
from .fitting import DEFAULT_TOL
from .gallery import (
    ConfigError,
    exit_code,
    expand,
    load_config,
    report_json,
    report_rows,
    run_gallery,
    run_items,
)

CONFIG_ERROR = 2


def _load(config):
    try:
        return load_config(config)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(CONFIG_ERROR)


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@click.group()
def main():
    """Audit curvature identities over a gallery of metrics and hypersurfaces."""


@main.command()
@click.option("--config", type=click.Path(dir_okay=False), default=None,
              help="Gallery JSON; the built-in default gallery when omitted.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the report here.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--strict", is_flag=True, help="Exit 1 when any case errored.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for algebraic cases.")
@click.option("--tol", type=click.FloatRange(min=0, min_open=True), default=DEFAULT_TOL,
              show_default=True, help="Conclusion tolerance.")
@click.option("--no-meta", is_flag=True, help="Omit wall times so reruns are byte-identical.")
def verify(config, out, fmt, workers, strict, seed, tol, no_meta):
    """Run every requested audit on every case and write the report."""
    cases = _load(config)
    report = run_gallery(cases, tol=tol, seed=seed, workers=workers, meta=not no_meta)
    if fmt == "json":
        _emit(report_json(report), out)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["case", "audit", "premise", "kind", "key", "value"])
        writer.writerows(report_rows(report))
        _emit(buf.getvalue(), out)
    summary = report["summary"]
    for item in summary["failing"]:
        click.echo(f"FAIL {item}", err=True)
    for name in summary["errors"]:
        click.echo(f"ERRORED {name}", err=True)
    click.echo(f"{summary['passed']} passed, {summary['failed']} failed, "
               f"{summary['errored']} errored", err=True)
    sys.exit(exit_code(report, strict))


@main.command()
@click.option("--case", "case_name", required=True, help="Case name, or an expanded name like NAME[0].")
@click.option("--config", type=click.Path(dir_okay=False), default=None)
@click.option("--tol", type=click.FloatRange(min=0, min_open=True), default=DEFAULT_TOL)
@click.option("--seed", type=int, default=0)
def classify(case_name, config, tol, seed):
    """Print the classification of one case as JSON."""
    items = [it for it in expand(_load(config), tol, seed)
             if case_name in (it.case.name, it.label)]
    if not items:
        click.echo(f"error: no case named {case_name!r}", err=True)
        sys.exit(CONFIG_ERROR)
    out = []
    for frag in run_items(items):
        entry = {"name": frag["name"], "status": frag["status"]}
        for key in ("point", "classification", "error"):
            if key in frag:
                entry[key] = frag[key]
        out.append(entry)
    click.echo(json.dumps(out, indent=2))
    sys.exit(1 if any(e["status"] == "errored" for e in out) else 0)


@main.command(name="list")
def list_cmd():
    """List the audits, chart kinds and assertable conditions."""
    click.echo("audits:")
    for name in AUDITS:
        click.echo(f"  {name}")
    click.echo("chart kinds:")
    for name in CHART_KINDS:
        click.echo(f"  {name}")
    click.echo("assertable conditions:")
    for name in ASSERTABLE:
        click.echo(f"  {name}")


if __name__ == "__main__":
    main()
