"""Command-line interface.

Exit codes: 0 success, 1 validation/syntax/not-found/conflict, 2 I/O.
Every command opens the store under --store (or DOCMART_STORE), does one
unit of work, and releases the writer lock on the way out; `serve` holds
the store open until stopped.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .errors import DocmartError, ValidationError
from .query import ClassificationSpec, parse_query
from .store import Store
from .warehouse import EnrichmentSource, PERMISSIVE_FILTER, SelectionFilter


@click.group()
@click.option(
    "--store",
    "store_path",
    envvar="DOCMART_STORE",
    default=".docmart",
    show_default=True,
    metavar="DIR",
    help="store directory (also via DOCMART_STORE)",
)
@click.pass_context
def cli(ctx: click.Context, store_path: str):
    """Document warehouse with sessions, data marts, and recommendations."""
    ctx.obj = store_path


def _parse_filter(text: str | None) -> SelectionFilter:
    if not text:
        return PERMISSIVE_FILTER
    try:
        mapping = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"filter spec is not valid JSON: {exc}")
    if not isinstance(mapping, dict):
        raise ValidationError("filter spec must be a JSON object")
    return SelectionFilter.from_mapping(mapping)


@cli.command()
@click.argument("file", metavar="FILE")
@click.option("--filter", "filter_spec", default=None, metavar="JSON",
              help='selection filter, e.g. \'{"accepted_pub_types": ["report"]}\'')
@click.pass_obj
def ingest(store_path: str, file: str, filter_spec: str | None):
    """Ingest a JSONL file of document records."""
    selection = _parse_filter(filter_spec)
    with open(file, encoding="utf-8") as fh, Store(store_path) as store:
        report = store.ingest_lines(fh, selection)
    click.echo(
        f"accepted={report.accepted} merged_duplicates={report.merged_duplicates} "
        f"rejected={len(report.rejected)}"
    )
    for line_number, reason in report.rejected:
        click.echo(f"rejected line {line_number}: {reason}", err=True)


@cli.command()
@click.pass_obj
def schema(store_path: str):
    """Print warehouse attributes with kind and coverage."""
    with Store(store_path) as store:
        for descriptor in store.schema():
            click.echo(f"{descriptor.name} {descriptor.kind} {descriptor.coverage:.2f}")


@cli.command()
@click.option("--require", "required", multiple=True, required=True, metavar="ATTRS",
              help="attributes that should be present (repeatable, comma-separable)")
@click.pass_obj
def gaps(store_path: str, required: tuple[str, ...]):
    """Report required attributes that are missing or undervalued."""
    names = [part.strip() for raw in required for part in raw.split(",") if part.strip()]
    with Store(store_path) as store:
        report = store.detect_gaps(names)
    for name, kind, affected in report.entries:
        click.echo(f"{name} {kind} {affected}")


@cli.command()
@click.argument("csv_file", metavar="CSV")
@click.option("--join", "join_attr", required=True, metavar="ATTR",
              help="document attribute matched against the first CSV column")
@click.option("--target", "target_attr", required=True, metavar="ATTR",
              help="attribute written from the second CSV column")
@click.pass_obj
def enrich(store_path: str, csv_file: str, join_attr: str, target_attr: str):
    """Fill an attribute from a two-column CSV (join_key,value)."""
    text = Path(csv_file).read_text(encoding="utf-8")
    source = EnrichmentSource.from_csv(Path(csv_file).name, join_attr, target_attr, text)
    with Store(store_path) as store:
        summary = store.enrich(source)
    click.echo(json.dumps(summary.to_json(), sort_keys=True))


@cli.command()
@click.argument("text")
@click.option("--user", "identity", default=None, metavar="ID",
              help="personalize the order for this identity")
@click.option("--json", "as_json", is_flag=True, help="print the full result set as JSON")
@click.pass_obj
def query(store_path: str, text: str, identity: str | None, as_json: bool):
    """Run a Boolean query; one doc_id per line in result order."""
    with Store(store_path) as store:
        results = store.query(text, identity=identity)
    if as_json:
        click.echo(json.dumps(results.to_json(), sort_keys=True))
    else:
        for doc_id in results.doc_ids:
            click.echo(doc_id)


@cli.command()
@click.argument("steps", nargs=-1, metavar="[ATTR=VALUE...]")
@click.pass_obj
def explore(store_path: str, steps: tuple[str, ...]):
    """Faceted view of the warehouse, optionally drilled down a path."""
    path = []
    for step in steps:
        if "=" not in step:
            raise ValidationError(f"exploration step must look like attr=value: {step!r}")
        name, _, value = step.partition("=")
        path.append((name.strip(), value.strip()))
    with Store(store_path) as store:
        view = store.explore(path)
    click.echo(json.dumps(view.to_json(), sort_keys=True))


@cli.command()
@click.option("--axes", required=True, metavar="A[,B...]", help="classification axes")
@click.option("--constraint", default=None, metavar="QUERY",
              help="only classify documents matching this query")
@click.pass_obj
def classify(store_path: str, axes: str, constraint: str | None):
    """Group documents by attribute values along one or more axes."""
    spec = ClassificationSpec(
        axes=tuple(a.strip() for a in axes.split(",") if a.strip()),
        constraint=parse_query(constraint) if constraint else None,
    )
    with Store(store_path) as store:
        groups = store.classify(spec)
    for key, doc_ids in groups.items():
        click.echo(" ".join(key) + ": " + " ".join(doc_ids))


@cli.group()
def mart():
    """Build, list, and export data marts."""


@mart.command("build")
@click.argument("name")
@click.pass_obj
def mart_build(store_path: str, name: str):
    """Build (or rebuild) a mart from current warehouse state."""
    with Store(store_path) as store:
        built = store.mart_build(name)
    click.echo(f"built {name} cells={len(built.cells)}")


@mart.command("list")
@click.pass_obj
def mart_list(store_path: str):
    """List known marts and their build state."""
    with Store(store_path) as store:
        rows = store.mart_list()
    for row in rows:
        dims = ",".join(row["dimensions"])
        state = f"built cells={row['cell_count']}" if row["built"] else "not built"
        click.echo(f"{row['name']} [{dims}] {row['measure']} {state}")


@mart.command("export")
@click.argument("name")
@click.pass_obj
def mart_export(store_path: str, name: str):
    """Print a built mart as CSV."""
    with Store(store_path) as store:
        click.echo(store.mart_export(name), nl=False)


@mart.command("refresh")
@click.argument("name")
@click.pass_obj
def mart_refresh(store_path: str, name: str):
    """Rebuild an already-built mart from current state."""
    with Store(store_path) as store:
        built = store.mart_refresh(name)
    click.echo(f"refreshed {name} cells={len(built.cells)}")


@cli.command()
@click.option("--user", "identity", required=True, metavar="ID")
@click.option("-n", "count", default=5, show_default=True, metavar="K",
              help="how many documents to recommend")
@click.pass_obj
def recommend(store_path: str, identity: str, count: int):
    """Recommend unseen documents for a user; one doc_id per line."""
    with Store(store_path) as store:
        for doc_id in store.recommend(identity, count):
            click.echo(doc_id)


@cli.command()
@click.pass_obj
def compact(store_path: str):
    """Rewrite the journal as a single base snapshot."""
    with Store(store_path) as store:
        store.compact()
        click.echo(f"compacted {store.journal_path}")


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--refresh-interval", default=None, type=float, metavar="SECONDS",
              help="periodically rebuild built marts")
@click.pass_obj
def serve(store_path: str, host: str, port: int, refresh_interval: float | None):
    """Serve the HTTP API until interrupted."""
    from .api import StoreConfig, run_server

    config = StoreConfig(
        data_dir=Path(store_path), host=host, port=port,
        refresh_interval=refresh_interval,
    )
    run_server(config)


def main(argv: list[str] | None = None) -> int:
    """Dispatch argv and translate errors into the documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        if exc.ctx is not None:
            click.echo(exc.ctx.get_usage(), err=True)
        return 1
    except DocmartError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2 if exc.code == "internal" else 1
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


def entry():
    sys.exit(main(sys.argv[1:]))
