"""Operator command line.

``ingest`` summarizes a dataset, ``simulate`` writes a synthetic cohort's
event log, ``analyze`` computes the evaluation tables from any event log.
Exit codes: 0 ok, 2 ingest/input error, 3 insufficient data.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .domain import ExplanationStyle
from .fuzzy import load_weights
from .ingest import IngestError, dataset_stats, load_dataset
from .simulate import ProfileError, load_profile, simulate_to_log, synthetic_dataset
from .store import read_events, views_from_events
from .tables import (
    InsufficientData,
    render_correlation,
    render_fuzzy,
    render_objective,
    render_subjective,
)

EXIT_INGEST_ERROR = 2
EXIT_INSUFFICIENT_DATA = 3


@click.group()
def main() -> None:
    """Study-platform operator tools."""


@main.command()
@click.option("--ratings", "ratings_path", required=True, type=click.Path())
@click.option("--catalog", "catalog_path", type=click.Path(), default=None)
@click.option("--schema", "schema_path", type=click.Path(), default=None)
@click.option("--column-map", "column_map", type=click.Path(), default=None)
def ingest(ratings_path, catalog_path, schema_path, column_map) -> None:
    """Load a ratings file and print summary counts."""
    try:
        ds = load_dataset(
            ratings_path,
            catalog_path=catalog_path,
            schema_path=schema_path,
            column_map=column_map,
        )
    except (IngestError, OSError) as exc:
        click.echo(f"ingest error: {exc}", err=True)
        sys.exit(EXIT_INGEST_ERROR)
    stats = dataset_stats(ds)
    click.echo(
        f"{stats.n_users} users / {stats.n_movies} movies / "
        f"{stats.n_ratings} ratings"
    )
    click.echo(f"ratings per user: {stats.ratings_per_user:.2f}")
    click.echo(f"movies per user: {stats.movies_per_user:.2f}")
    if ds.diagnostics:
        click.echo(f"rejected rows: {len(ds.diagnostics)}")
        for diag in ds.diagnostics[:10]:
            click.echo(f"  line {diag.line_no}: {diag.reason}")


@main.command()
@click.option("--sessions", "n_sessions", required=True, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--profile", "profile_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--ratings", "ratings_path", type=click.Path(), default=None,
              help="Dataset to study against; a built-in synthetic dataset is "
                   "used when omitted.")
@click.option("--catalog", "catalog_path", type=click.Path(), default=None)
@click.option("--schema", "schema_path", type=click.Path(), default=None)
@click.option("--dataset-seed", default=42, type=int,
              help="Seed for the built-in synthetic dataset.")
def simulate(n_sessions, seed, profile_path, out_path, ratings_path,
             catalog_path, schema_path, dataset_seed) -> None:
    """Write N complete synthetic sessions as a canonical event log."""
    if n_sessions < 0:
        click.echo("--sessions must be >= 0", err=True)
        sys.exit(EXIT_INGEST_ERROR)
    try:
        profile = load_profile(profile_path)
    except (ProfileError, OSError) as exc:
        click.echo(f"profile error: {exc}", err=True)
        sys.exit(EXIT_INGEST_ERROR)
    try:
        if ratings_path:
            ds = load_dataset(ratings_path, catalog_path=catalog_path,
                              schema_path=schema_path)
        else:
            ds = synthetic_dataset(seed=dataset_seed)
    except (IngestError, OSError) as exc:
        click.echo(f"ingest error: {exc}", err=True)
        sys.exit(EXIT_INGEST_ERROR)
    out = Path(out_path)
    if out.exists():
        out.unlink()
    store = simulate_to_log(out, ds, profile, n_sessions, seed)
    store.close()
    click.echo(f"wrote {n_sessions} sessions to {out}")


@main.command()
@click.option("--log", "log_path", required=True, type=click.Path())
@click.option("--table", "table", required=True,
              type=click.Choice(["3", "4", "5", "6"]))
@click.option("--weights", "weights_path", type=click.Path(), default=None,
              help="Weights document for table 6 (default: equal weights).")
@click.option("--style", default="Context-aware",
              help="Explanation style for table 5.")
@click.option("--source", default="mixed", type=click.Choice(["mixed", "likert"]),
              help="Metric source for table 5 correlations.")
@click.option("--format", "fmt", default="text", type=click.Choice(["text", "json"]))
def analyze(log_path, table, weights_path, style, source, fmt) -> None:
    """Render one evaluation table from an event log."""
    try:
        events = read_events(log_path)
    except OSError as exc:
        click.echo(f"cannot read log: {exc}", err=True)
        sys.exit(EXIT_INGEST_ERROR)
    views = views_from_events(events)
    try:
        if table == "3":
            rendered = render_objective(views, fmt=fmt)
        elif table == "4":
            rendered = render_subjective(views, fmt=fmt)
        elif table == "5":
            rendered = render_correlation(
                views, style=ExplanationStyle.from_label(style),
                source=source, fmt=fmt,
            )
        else:
            weights = load_weights(weights_path) if weights_path else None
            rendered = render_fuzzy(views, weights=weights, fmt=fmt)
    except InsufficientData as exc:
        click.echo(f"insufficient data: {exc}", err=True)
        sys.exit(EXIT_INSUFFICIENT_DATA)
    except (ValueError, OSError) as exc:
        click.echo(f"analyze error: {exc}", err=True)
        sys.exit(EXIT_INGEST_ERROR)
    click.echo(rendered, nl=False)


if __name__ == "__main__":
    main()
