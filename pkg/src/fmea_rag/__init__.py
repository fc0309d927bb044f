"""Knowledge-graph backed retrieval and question answering for FMEA tables."""

from .config import (
    EmbedderSettings,
    LlmSettings,
    RetrievalSettings,
    ServiceConfig,
    build_embedder,
    build_llm,
    load_config,
    parse_config,
)
from .embedding import (
    Chunk,
    HashingEmbedder,
    RemoteEmbedder,
    build_all_chunks,
    build_chunk,
    cosine,
    embed_all,
    top_k,
)
from .errors import FmeaRagError
from .evaluation import (
    EvalReport,
    EvalSettings,
    ValidationItem,
    build_baseline_index,
    context_precision,
    context_recall,
    load_validation_dataset,
    run_eval,
)
from .graph import KnowledgeGraph, Triple, load, save, transpose
from .llm import RemoteLlm, ScriptedLlm
from .persistence import StoreBundle, load_store, save_store, store_exists
from .query import QueryResult, execute, format_query, parse_query, run_query, schema_text
from .records import (
    FailureRecord,
    FmeaTable,
    compute_rpn,
    expand_abbreviations,
    parse_abbreviation_map,
    parse_fmea_table,
    serialize_fmea_table,
)
from .retrieval import (
    ContextItem,
    Inquiry,
    RetrievalOutcome,
    answer_inquiry,
    generate_answer,
    generate_query,
    retrieve,
)

__version__ = "0.1.0"

__all__ = [
    "Chunk",
    "ContextItem",
    "EmbedderSettings",
    "EvalReport",
    "EvalSettings",
    "FailureRecord",
    "FmeaRagError",
    "FmeaTable",
    "HashingEmbedder",
    "Inquiry",
    "KnowledgeGraph",
    "LlmSettings",
    "QueryResult",
    "RemoteEmbedder",
    "RemoteLlm",
    "RetrievalOutcome",
    "RetrievalSettings",
    "ScriptedLlm",
    "ServiceConfig",
    "StoreBundle",
    "Triple",
    "ValidationItem",
    "answer_inquiry",
    "build_all_chunks",
    "build_baseline_index",
    "build_chunk",
    "build_embedder",
    "build_llm",
    "compute_rpn",
    "context_precision",
    "context_recall",
    "cosine",
    "embed_all",
    "execute",
    "expand_abbreviations",
    "format_query",
    "generate_answer",
    "generate_query",
    "load",
    "load_config",
    "load_store",
    "load_validation_dataset",
    "parse_abbreviation_map",
    "parse_config",
    "parse_fmea_table",
    "parse_query",
    "retrieve",
    "run_eval",
    "run_query",
    "save",
    "save_store",
    "schema_text",
    "serialize_fmea_table",
    "store_exists",
    "top_k",
    "transpose",
]
