"""Query the graph directly with the structured query language."""

from fmea_rag import parse_fmea_table, run_query, schema_text, transpose
from fmea_rag.errors import QuerySyntaxError
from fmea_rag.fixtures import battery_module_csv
from fmea_rag.query import render_rows

graph = transpose(parse_fmea_table(battery_module_csv()))

print(schema_text())


def show(text):
    print(f"\n> {text}")
    result = run_query(text, graph)
    for line in render_rows(result):
        print(f"  {line}")


show('MATCH (e:FailureEffect) RETURN e.name, e.S ORDER BY e.S DESC')

# patterns chain through relations, filters pin a node by name
show(
    'MATCH (m:FailureMode {name: "Weak weld joints"})'
    "-[:isDueToFailureCause]->(c) RETURN c.name, c.O, c.RPN"
)

# aggregates collapse all matches into one row
show("MATCH (m:FailureMode)-[:isDueToFailureCause]->(c) RETURN count(c), avg(c.RPN)")

show(
    "MATCH (c:FailureCause)-[:isImprovedByFailureMeasure]->(x) "
    "WHERE c.RPN > 100 RETURN c.name, x.name"
)

# syntax errors carry line and column
try:
    run_query("MATCH (m:FailureMode RETURN m", graph)
except QuerySyntaxError as exc:
    print(f"\nrejected: {exc}")
