"""Score three retrieval pipelines against a question dataset."""

from fmea_rag import (
    HashingEmbedder,
    ScriptedLlm,
    embed_all,
    load_validation_dataset,
    parse_fmea_table,
    run_eval,
    transpose,
)
from fmea_rag.evaluation import EvalSettings, render_report
from fmea_rag.fixtures import (
    assembly_line_csv,
    assembly_line_questions,
    mock_llm_rules_path,
)

table = parse_fmea_table(assembly_line_csv())
graph = transpose(table)
embedder = HashingEmbedder()
embed_all(graph, embedder)
llm = ScriptedLlm.from_file(mock_llm_rules_path())

dataset = load_validation_dataset(assembly_line_questions())
print(f"{len(dataset)} questions, graph of {graph.content_node_count} nodes")

# baseline chunks the flat table text; the kg pipelines read the graph
report = run_eval(dataset, graph, table, llm, embedder, EvalSettings())
print()
print(render_report(report))

worst = min(report.items, key=lambda r: r.context_recall)
print(f"weakest cell: {worst.pipeline} on {worst.question!r}")
print(f"  diagnostics: {'; '.join(worst.diagnostics)}")
