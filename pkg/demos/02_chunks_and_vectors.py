"""Chunk failure-mode subgraphs into text and search them by vector."""

from fmea_rag import (
    HashingEmbedder,
    build_all_chunks,
    embed_all,
    parse_fmea_table,
    top_k,
    transpose,
)
from fmea_rag.fixtures import battery_module_csv

graph = transpose(parse_fmea_table(battery_module_csv()))

# one chunk per failure mode, process step first, ratings after their owner
for chunk in build_all_chunks(graph):
    print(f"mode {chunk.mode_id}: {chunk.text}\n")

embedder = HashingEmbedder()  # deterministic, local, no network
count = embed_all(graph, embedder)
print(f"stored {count} embeddings of dimension {embedder.dimension}")

query = embedder.embed("weld quality and resistance testing")
print("\ntop 2 chunks for the weld question:")
for mode_id, text, score in top_k(query, graph, 2):
    print(f"  score {score:.3f} (mode {mode_id}): {text[:72]}...")
