"""On-disk store layout: one graph.json plus the source table.csv.

The table is kept because the evaluation baseline chunks the flat
table text, not the graph.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from .errors import StoreFormatError
from .graph import KnowledgeGraph, load as load_graph, save as save_graph
from .records import FmeaTable, parse_fmea_table, serialize_fmea_table

GRAPH_FILE = "graph.json"
TABLE_FILE = "table.csv"


@dataclass(frozen=True)
class StoreBundle:
    graph: KnowledgeGraph
    table: FmeaTable


def store_exists(data_dir: str | Path) -> bool:
    base = Path(data_dir)
    return (base / GRAPH_FILE).is_file() and (base / TABLE_FILE).is_file()


def save_store(data_dir: str | Path, bundle: StoreBundle) -> None:
    base = Path(data_dir)
    base.mkdir(parents=True, exist_ok=True)
    # Write-then-rename keeps readers off half-written files.
    table_tmp = base / (TABLE_FILE + ".tmp")
    table_tmp.write_text(serialize_fmea_table(bundle.table), encoding="utf-8")
    os.replace(table_tmp, base / TABLE_FILE)
    graph_tmp = base / (GRAPH_FILE + ".tmp")
    save_graph(bundle.graph, graph_tmp)
    os.replace(graph_tmp, base / GRAPH_FILE)


def load_store(data_dir: str | Path) -> StoreBundle | None:
    base = Path(data_dir)
    if not store_exists(base):
        return None
    try:
        graph = load_graph(base / GRAPH_FILE)
        table = parse_fmea_table((base / TABLE_FILE).read_text(encoding="utf-8"))
    except OSError as exc:
        raise StoreFormatError(f"cannot read store in {base}: {exc}") from exc
    return StoreBundle(graph=graph, table=table)
