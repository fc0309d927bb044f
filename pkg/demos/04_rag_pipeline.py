"""Answer questions over the graph: query path first, vectors as fallback."""

from fmea_rag import (
    HashingEmbedder,
    Inquiry,
    ScriptedLlm,
    answer_inquiry,
    embed_all,
    parse_fmea_table,
    transpose,
)
from fmea_rag.fixtures import battery_module_csv, mock_llm_rules_path

graph = transpose(parse_fmea_table(battery_module_csv()))
embedder = HashingEmbedder()
embed_all(graph, embedder)

# the scripted model stands in for a hosted one; same call surface
llm = ScriptedLlm.from_file(mock_llm_rules_path())


def show(question):
    outcome = answer_inquiry(Inquiry(question, top_k=2), graph, llm, embedder)
    print(f"\nQ: {question}")
    print(f"A: {outcome.answer}")
    print(f"   provenance: {outcome.provenance}")
    if outcome.generated_query:
        print(f"   query: {outcome.generated_query}")
    for item in outcome.contexts:
        score = "" if item.cosine_score is None else f" (score {item.cosine_score:.3f})"
        print(f"   context{score}: {item.text[:70]}")
    for line in outcome.diagnostics:
        print(f"   . {line}")


# matches a rule, so the model writes a query and the graph answers
show("How many failure modes are there?")

# no rule matches, so retrieval falls back to vector search over chunks
show("What can go wrong with separator alignment?")
