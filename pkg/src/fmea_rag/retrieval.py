"""Question answering over the graph store.

The pipeline asks the model for a graph query first. A query that
parses, executes and returns rows answers the question with graph
provenance; everything else falls back to vector search over the
per-mode chunks. Which path ran, and why, is recorded in a diagnostics
journal on the outcome.

Epistemic state is surfaced rather than hidden: vector contexts carry
their cosine scores, graph contexts carry the generated query, and the
provenance field says which route produced the answer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .embedding import Embedder, top_k
from .errors import EmptyContextsError, FmeaRagError, QueryError, ValidationError
from .graph import KnowledgeGraph
from .llm import LlmClient
from .prompts import build_answer_prompt, build_query_prompt
from .query import execute, parse_query, render_rows, schema_text

GRAPH_QUERY = "graph-query"
VECTOR_SEARCH = "vector-search"

NO_QUERY_TOKEN = "NONE"

DEFAULT_TOP_K = 3
DEFAULT_QUERY_ROW_CAP = 50


@dataclass(frozen=True)
class Inquiry:
    """A question plus the number of vector contexts wanted on fallback."""

    text: str
    top_k: int = DEFAULT_TOP_K

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise ValidationError("inquiry text must not be empty")
        if self.top_k < 1:
            raise ValidationError("top_k must be at least 1")


@dataclass(frozen=True)
class ContextItem:
    """One retrieved context. cosine_score is set on the vector path only."""

    text: str
    cosine_score: float | None = None


@dataclass
class RetrievalOutcome:
    provenance: str
    contexts: list[ContextItem]
    generated_query: str | None = None
    answer: str = ""
    diagnostics: list[str] = field(default_factory=list)


def strip_completion(completion: str) -> str:
    """Trim whitespace and one surrounding markdown code fence, if any."""
    text = completion.strip()
    if text.startswith("```"):
        lines = text.splitlines()
        lines = lines[1:]
        if lines and lines[-1].strip() == "```":
            lines = lines[:-1]
        text = "\n".join(lines).strip()
    return text


def generate_query(inquiry: Inquiry, llm: LlmClient, schema: str | None = None) -> str | None:
    """Ask the model for one query; None when it answers with NONE."""
    prompt = build_query_prompt(schema or schema_text(), inquiry.text)
    completion = strip_completion(llm.complete(prompt))
    if not completion or completion == NO_QUERY_TOKEN:
        return None
    return completion


def generate_answer(inquiry: Inquiry, contexts: list[ContextItem], llm: LlmClient) -> str:
    """Answer from retrieved contexts. Empty contexts are a caller bug."""
    if not contexts:
        raise EmptyContextsError("cannot generate an answer without contexts")
    prompt = build_answer_prompt([c.text for c in contexts], inquiry.text)
    return llm.complete(prompt)


def retrieve(
    inquiry: Inquiry,
    graph: KnowledgeGraph,
    llm: LlmClient,
    embedder: Embedder,
    enable_query_path: bool = True,
    query_row_cap: int = DEFAULT_QUERY_ROW_CAP,
) -> RetrievalOutcome:
    """Fetch contexts for an inquiry; the answer field stays empty here.

    Invariants: graph-query outcomes always carry the generated query
    and score-free contexts; vector-search outcomes carry a cosine score
    in [-1, 1] on every context. The graph path never touches the
    embedder.
    """
    diagnostics: list[str] = []
    generated: str | None = None
    if not enable_query_path:
        diagnostics.append("query-generation-disabled")
    else:
        generated = generate_query(inquiry, llm)
        if generated is None:
            diagnostics.append("query-none")
        else:
            diagnostics.append("query-generated")
            outcome = _try_graph_query(generated, graph, diagnostics, query_row_cap)
            if outcome is not None:
                return outcome
    diagnostics.append("fallback: vector-search")
    if graph.embedding_count == 0:
        raise EmptyContextsError(
            "no contexts available: query path produced nothing and the "
            "store has no embeddings"
        )
    query_vector = embedder.embed(inquiry.text)
    hits = top_k(query_vector, graph, inquiry.top_k)
    diagnostics.append(f"vector-search: returned {len(hits)} contexts")
    contexts = [ContextItem(text=chunk, cosine_score=score) for _mode, chunk, score in hits]
    return RetrievalOutcome(
        provenance=VECTOR_SEARCH,
        contexts=contexts,
        generated_query=generated,
        diagnostics=diagnostics,
    )


def _try_graph_query(
    generated: str,
    graph: KnowledgeGraph,
    diagnostics: list[str],
    query_row_cap: int,
) -> RetrievalOutcome | None:
    """Run the generated query; None means the caller must fall back."""
    try:
        ast = parse_query(generated)
    except QueryError as exc:
        diagnostics.append(f"query-parse-failure: {exc}")
        return None
    try:
        result = execute(ast, graph)
    except FmeaRagError as exc:
        diagnostics.append(f"query-execution-error: {exc}")
        return None
    if not result.rows:
        diagnostics.append("query-empty-result")
        return None
    diagnostics.append(f"graph-query-hit: {len(result.rows)} rows")
    lines = render_rows(result)
    if len(lines) > query_row_cap:
        diagnostics.append(f"query-context-truncated: kept {query_row_cap} of {len(lines)} rows")
        lines = lines[:query_row_cap]
    return RetrievalOutcome(
        provenance=GRAPH_QUERY,
        contexts=[ContextItem(text=line) for line in lines],
        generated_query=generated,
        diagnostics=diagnostics,
    )


def answer_inquiry(
    inquiry: Inquiry,
    graph: KnowledgeGraph,
    llm: LlmClient,
    embedder: Embedder,
    enable_query_path: bool = True,
    query_row_cap: int = DEFAULT_QUERY_ROW_CAP,
) -> RetrievalOutcome:
    """retrieve() plus answer generation, the full pipeline for one question."""
    outcome = retrieve(
        inquiry,
        graph,
        llm,
        embedder,
        enable_query_path=enable_query_path,
        query_row_cap=query_row_cap,
    )
    outcome.answer = generate_answer(inquiry, outcome.contexts, llm)
    return outcome
