"""Command line entry points: ingest, serve, eval."""

from __future__ import annotations

import json
from pathlib import Path

import click

from .evaluation import DEFAULT_K_VALUES, load_log, sweep
from .ingest import IngestManifest, build_index, load_bundle


@click.group()
def main() -> None:
    """Multimodal keyframe search engine."""


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def ingest(manifest_path: str, out_dir: str) -> None:
    """Build an index from the sources named in a manifest."""
    manifest = IngestManifest.load(manifest_path)
    report = build_index(manifest, out_dir)
    click.echo(f"indexed {report.indexed} keyframes -> {out_dir}")
    if report.skipped:
        click.echo(f"skipped {len(report.skipped)} records (see ingest_report.json)")
    for fname, sparsity in report.field_sparsity.items():
        click.echo(f"  {fname}: vocab={report.field_vocabulary[fname]} "
                   f"sparsity={sparsity:.4%}")


@main.command()
@click.option("--index", "index_dir", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8080, show_default=True, type=int)
def serve(index_dir: str, host: str, port: int) -> None:
    """Serve search, autocomplete, similarity and thumbnails over HTTP."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(index_dir), host=host, port=port)


@main.group()
def eval() -> None:
    """Offline evaluation of ranker assignments."""


@eval.command("convert")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--format", "source_format", required=True)
def eval_convert(log_path: str, source_format: str) -> None:
    """Convert an external query-log format to the native JSONL schema.

    Stub: competition server logs are not redistributable, so no external
    format is bundled. Plug a converter in here; the native schema is one
    JSON object per line: {"query": <spec>, "truth": [{"video", "segment"}]}.
    """
    raise click.ClickException(
        f"no converter registered for format {source_format!r}; "
        "write queries directly in the native JSONL schema (see README)"
    )


@eval.command("sweep")
@click.option("--index", "index_dir", required=True, type=click.Path(exists=True))
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--k", "k_spec", default=",".join(str(k) for k in DEFAULT_K_VALUES),
              show_default=True, help="Comma-separated MRR@k cutoffs.")
@click.option("--out", "out_path", default=None, type=click.Path(),
              help="Write the full report as JSON.")
@click.option("--page-size", default=1000, show_default=True, type=int)
def eval_sweep(index_dir: str, log_path: str, k_spec: str,
               out_path: str | None, page_size: int) -> None:
    """Replay a query log under all 64 ranker triples and rank them by MRR."""
    bundle = load_bundle(index_dir)
    queries = load_log(log_path)
    k_values = tuple(int(k) for k in k_spec.split(","))
    report = sweep(
        bundle.snapshot,
        queries,
        k_values,
        page_size,
        palette_names=bundle.palette.names,
    )
    click.echo(report.format_table())
    if out_path:
        Path(out_path).write_text(json.dumps(report.to_json(), indent=2))
        click.echo(f"report written to {out_path}")


if __name__ == "__main__":
    main()
