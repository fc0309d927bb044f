"""Command line front end.

Every verb works against the data directory from the config (or the
--data-dir override), so `ingest` here and `serve` later share a store.
Exit codes: 0 success, 1 user error, 2 internal error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .config import ServiceConfig, build_embedder, build_llm, load_config
from .embedding import embed_all
from .errors import FmeaRagError
from .evaluation import EvalSettings, load_validation_dataset, render_report, run_eval
from .graph import transpose
from .persistence import StoreBundle, load_store, save_store
from .query import format_value, run_query
from .records import expand_abbreviations, parse_abbreviation_map, parse_fmea_table
from .retrieval import Inquiry, answer_inquiry


class UserInputError(FmeaRagError):
    """Raised by CLI glue for operator mistakes outside the library."""


def _table(header: tuple[str, ...], rows: list[tuple[str, ...]]) -> str:
    widths = [len(h) for h in header]
    for row in rows:
        widths = [max(w, len(cell)) for w, cell in zip(widths, row)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*header), fmt.format(*("-" * w for w in widths))]
    lines.extend(fmt.format(*row) for row in rows)
    return "\n".join(lines)


def _load_settings(config_path: str | None, data_dir: str | None) -> ServiceConfig:
    config = load_config(config_path) if config_path else ServiceConfig()
    if data_dir:
        config = ServiceConfig(
            listen_host=config.listen_host,
            listen_port=config.listen_port,
            data_dir=data_dir,
            embedder=config.embedder,
            llm=config.llm,
            retrieval=config.retrieval,
            embed_workers=config.embed_workers,
        )
    return config


def _require_store(config: ServiceConfig) -> StoreBundle:
    bundle = load_store(config.data_dir)
    if bundle is None:
        raise UserInputError(
            f"no store found in {config.data_dir!r}; run 'fmea-rag ingest <csv>' first"
        )
    return bundle


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON config file.")
@click.option("--data-dir", default=None, help="Override the store directory.")
@click.pass_context
def cli(ctx: click.Context, config_path: str | None, data_dir: str | None) -> None:
    """Knowledge-graph retrieval over FMEA tables."""
    ctx.obj = _load_settings(config_path, data_dir)


@cli.command()
@click.argument("csv_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--abbrev", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Two-column abbreviation CSV applied before parsing.")
@click.pass_obj
def ingest(config: ServiceConfig, csv_file: str, abbrev: str | None) -> None:
    """Parse an FMEA CSV, build the graph, embed, and persist."""
    text = Path(csv_file).read_text(encoding="utf-8")
    mapping = None
    if abbrev:
        mapping = parse_abbreviation_map(Path(abbrev).read_text(encoding="utf-8"))
    table = expand_abbreviations(parse_fmea_table(text, abbreviation_map=mapping))
    graph = transpose(table)
    embedder = build_embedder(config.embedder)
    embed_all(graph, embedder, max_workers=config.embed_workers)
    save_store(config.data_dir, StoreBundle(graph=graph, table=table))
    stats = graph.stats()
    click.echo(f"nodes: {stats.total_nodes}")
    click.echo(f"triples: {stats.total_relationships}")
    click.echo(f"embeddings: {len(graph.embeddings())}")


@cli.command()
@click.argument("question")
@click.option("-k", "top_k", type=int, default=None, help="Context count for vector search.")
@click.pass_obj
def ask(config: ServiceConfig, question: str, top_k: int | None) -> None:
    """Answer a question against the ingested store."""
    bundle = _require_store(config)
    embedder = build_embedder(config.embedder)
    llm = build_llm(config.llm)
    k = top_k if top_k is not None else config.retrieval.top_k
    outcome = answer_inquiry(
        Inquiry(question, top_k=k), bundle.graph, llm, embedder,
        query_row_cap=config.retrieval.query_row_cap,
    )
    click.echo(outcome.answer)
    click.echo(f"provenance: {outcome.provenance}")
    if outcome.generated_query:
        click.echo(f"query: {outcome.generated_query}")
    for index, item in enumerate(outcome.contexts, start=1):
        if item.cosine_score is None:
            click.echo(f"context {index}: {item.text}")
        else:
            click.echo(f"context {index} (score {item.cosine_score:.3f}): {item.text}")


@cli.command()
@click.argument("query_text")
@click.pass_obj
def query(config: ServiceConfig, query_text: str) -> None:
    """Run a graph query directly and print the result table."""
    bundle = _require_store(config)
    result = run_query(query_text, bundle.graph)
    rows = [tuple(format_value(value) for value in row) for row in result.rows]
    click.echo(_table(tuple(result.columns), rows))


@cli.command()
@click.pass_obj
def stats(config: ServiceConfig) -> None:
    """Print per-label degree statistics for the store."""
    bundle = _require_store(config)
    result = bundle.graph.stats()
    rows = [
        (row.label, str(row.node_count), str(row.min_relationships),
         str(row.max_relationships), f"{row.avg_relationships:.2f}")
        for row in result.rows
    ]
    click.echo(_table(("label", "nodes", "min", "max", "avg"), rows))
    click.echo(f"total nodes: {result.total_nodes}")
    click.echo(f"total relationships: {result.total_relationships}")
    click.echo(f"unique paths: {result.unique_path_count}")


@cli.command("eval")
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@click.option("--top-k", type=int, default=None)
@click.option("--judge", type=click.Choice(["deterministic", "llm"]), default="deterministic")
@click.pass_obj
def eval_command(config: ServiceConfig, dataset: str, top_k: int | None, judge: str) -> None:
    """Score the three retrieval pipelines on a validation dataset."""
    bundle = _require_store(config)
    items = load_validation_dataset(Path(dataset))
    embedder = build_embedder(config.embedder)
    llm = build_llm(config.llm)
    settings = EvalSettings(
        top_k=top_k if top_k is not None else config.retrieval.top_k,
        judge=judge,
        query_row_cap=config.retrieval.query_row_cap,
    )
    report = run_eval(items, bundle.graph, bundle.table, llm, embedder, settings)
    click.echo(render_report(report))


@cli.command()
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.pass_obj
def serve(config: ServiceConfig, host: str | None, port: int | None) -> None:
    """Start the HTTP service."""
    from .service import run_server

    if host or port:
        config = ServiceConfig(
            listen_host=host or config.listen_host,
            listen_port=port or config.listen_port,
            data_dir=config.data_dir,
            embedder=config.embedder,
            llm=config.llm,
            retrieval=config.retrieval,
            embed_workers=config.embed_workers,
        )
    run_server(config)


def main(argv: list[str] | None = None) -> None:
    try:
        cli.main(args=argv, prog_name="fmea-rag", standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except FmeaRagError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except Exception as exc:  # pragma: no cover - defensive
        click.echo(f"internal error: {exc!r}", err=True)
        sys.exit(2)
    sys.exit(0)


if __name__ == "__main__":
    main()
