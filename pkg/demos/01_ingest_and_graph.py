"""Parse an FMEA table and turn it into a knowledge graph."""

from fmea_rag import parse_fmea_table, transpose
from fmea_rag.fixtures import battery_module_csv

table = parse_fmea_table(battery_module_csv())
print(f"parsed {len(table.records)} rows")
for record in table.records:
    print(f"  {record.failure_mode}: RPN {record.rpn}")

graph = transpose(table)

# shared causes/effects collapse into one node each
stats = graph.stats()
print(f"\n{stats.total_nodes} nodes, {stats.total_relationships} relationships")
print(f"{stats.unique_path_count} unique paths")

print("\nrelationships per label:")
for row in stats.rows:
    print(
        f"  {row.label}: {row.node_count} nodes, "
        f"min {row.min_relationships}, max {row.max_relationships}, "
        f"avg {row.avg_relationships}"
    )

# walk one failure mode's subgraph in document order
mode = graph.nodes_by_label("FailureMode")[0]
print(f"\nsubgraph of {mode.symbol!r}:")
for node in graph.subgraph_of(mode.id):
    print(f"  {node.label}: {node.symbol} {node.literals or ''}")
