"""HTTP service over one FMEA store.

Single store per process. Ingest builds the replacement graph off to
the side and swaps a reference, so concurrent readers always see a
complete store. Eval admits one job at a time.
"""

from __future__ import annotations

import threading
import time
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from .config import ServiceConfig, build_embedder, build_llm
from .embedding import embed_all
from .errors import (
    EmbedderUnavailableError,
    EmptyContextsError,
    EvalConfigError,
    FmeaRagError,
    LlmUnavailableError,
    StoreFormatError,
    ValidationError,
)
from .evaluation import EvalSettings, load_validation_dataset, run_eval
from .graph import transpose
from .persistence import StoreBundle, load_store, save_store
from .records import expand_abbreviations, parse_abbreviation_map, parse_fmea_table
from .retrieval import Inquiry, answer_inquiry


class ServiceState:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.embedder = build_embedder(config.embedder)
        self.llm = build_llm(config.llm)
        self.store: StoreBundle | None = None
        self.ingest_lock = threading.Lock()
        self.eval_lock = threading.Lock()

    def load_persisted(self) -> None:
        try:
            self.store = load_store(self.config.data_dir)
        except (StoreFormatError, FmeaRagError):
            # A corrupt store directory must not keep the service down;
            # the next ingest overwrites it.
            self.store = None


def _error(status: int, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": detail})


async def _read_ingest_payload(request: Request) -> tuple[str, str | None]:
    content_type = request.headers.get("content-type", "")
    if content_type.startswith("multipart/form-data"):
        form = await request.form()
        upload = form.get("table")
        if upload is None:
            raise ValidationError("multipart ingest needs a 'table' file field")
        table_csv = (await upload.read()).decode("utf-8")
        abbrev_csv = None
        abbrev_upload = form.get("abbreviations")
        if abbrev_upload is not None:
            abbrev_csv = (await abbrev_upload.read()).decode("utf-8")
        return table_csv, abbrev_csv
    body = await request.body()
    if not body:
        raise ValidationError("empty ingest body")
    return body.decode("utf-8"), None


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    state = ServiceState(config or ServiceConfig())
    state.load_persisted()
    app = FastAPI(title="fmea-rag", docs_url=None, redoc_url=None)
    app.state.service = state

    @app.post("/ingest")
    async def ingest(request: Request):
        try:
            table_csv, abbrev_csv = await _read_ingest_payload(request)
        except UnicodeDecodeError:
            return _error(400, "ingest payload must be UTF-8 text")
        except FmeaRagError as exc:
            return _error(400, str(exc))
        return await run_in_threadpool(_perform_ingest, state, table_csv, abbrev_csv)

    @app.post("/ask")
    def ask(body: dict):
        question = body.get("question")
        if not isinstance(question, str) or not question.strip():
            return _error(400, "body must carry a non-empty 'question' string")
        k = body.get("k", state.config.retrieval.top_k)
        if not isinstance(k, int) or k < 1:
            return _error(400, "'k' must be a positive integer")
        bundle = state.store
        if bundle is None:
            return _error(409, "no store ingested yet")
        started = time.perf_counter()
        try:
            outcome = answer_inquiry(
                Inquiry(question, top_k=k),
                bundle.graph,
                state.llm,
                state.embedder,
                query_row_cap=state.config.retrieval.query_row_cap,
            )
        except LlmUnavailableError as exc:
            return _error(502, f"language model failure at stage {exc.stage}: {exc}")
        except EmbedderUnavailableError as exc:
            return _error(502, f"embedder failure during retrieval: {exc}")
        except EmptyContextsError as exc:
            return _error(409, f"store has no retrievable context: {exc}")
        except ValidationError as exc:
            return _error(400, str(exc))
        total_ms = (time.perf_counter() - started) * 1000.0
        return {
            "answer": outcome.answer,
            "provenance": outcome.provenance,
            "generated_query": outcome.generated_query,
            "contexts": [
                {"text": item.text, "cosine_score": item.cosine_score}
                for item in outcome.contexts
            ],
            "diagnostics": list(outcome.diagnostics),
            "timing": {"total_ms": round(total_ms, 2)},
        }

    @app.get("/stats")
    def stats():
        bundle = state.store
        if bundle is None:
            return _error(409, "no store ingested yet")
        result = bundle.graph.stats()
        return {
            "labels": [
                {
                    "label": row.label,
                    "node_count": row.node_count,
                    "min_relationships": row.min_relationships,
                    "max_relationships": row.max_relationships,
                    "avg_relationships": f"{row.avg_relationships:.2f}",
                }
                for row in result.rows
            ],
            "total_nodes": result.total_nodes,
            "total_relationships": result.total_relationships,
            "unique_path_count": result.unique_path_count,
        }

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "store_loaded": state.store is not None,
            "embedder_kind": state.embedder.kind,
            "llm_kind": state.llm.kind,
        }

    @app.post("/eval")
    async def eval_endpoint(request: Request):
        bundle = state.store
        if bundle is None:
            return _error(409, "no store ingested yet")
        try:
            body = await request.json()
        except ValueError:
            return _error(400, "eval body must be JSON")
        try:
            dataset, settings = _parse_eval_request(body, state.config)
        except FmeaRagError as exc:
            return _error(400, str(exc))
        except OSError as exc:
            return _error(400, f"cannot read dataset: {exc}")
        if not state.eval_lock.acquire(blocking=False):
            return _error(409, "an evaluation run is already in progress")
        try:
            report = await run_in_threadpool(
                run_eval, dataset, bundle.graph, bundle.table, state.llm, state.embedder, settings
            )
        except EvalConfigError as exc:
            # bad judge kind or an item the judge cannot score
            return _error(400, str(exc))
        finally:
            state.eval_lock.release()
        return {
            "pipelines": [
                {
                    "pipeline": score.pipeline,
                    "context_recall": score.context_recall,
                    "context_precision": score.context_precision,
                }
                for score in report.pipelines
            ],
            "items": [
                {
                    "question": item.question,
                    "pipeline": item.pipeline,
                    "context_recall": item.context_recall,
                    "context_precision": item.context_precision,
                    "provenance": item.provenance,
                }
                for item in report.items
            ],
            "metadata": report.metadata,
        }

    return app


def _perform_ingest(state: ServiceState, table_csv: str, abbrev_csv: str | None):
    try:
        mapping = parse_abbreviation_map(abbrev_csv) if abbrev_csv is not None else None
        table = parse_fmea_table(table_csv, abbreviation_map=mapping)
        table = expand_abbreviations(table)
    except FmeaRagError as exc:
        return _error(400, str(exc))
    with state.ingest_lock:
        try:
            graph = transpose(table)
            embed_all(graph, state.embedder, max_workers=state.config.embed_workers)
        except EmbedderUnavailableError as exc:
            return _error(503, f"embedder unavailable: {exc}")
        except FmeaRagError as exc:
            return _error(400, str(exc))
        bundle = StoreBundle(graph=graph, table=table)
        save_store(state.config.data_dir, bundle)
        state.store = bundle
    stats = graph.stats()
    return {
        "nodes": stats.total_nodes,
        "triples": stats.total_relationships,
        "embeddings": len(graph.embeddings()),
    }


def _parse_eval_request(body, config: ServiceConfig):
    import json as _json

    if body is None:
        raise ValidationError("eval request body is required")
    settings_kwargs = {
        "top_k": config.retrieval.top_k,
        "query_row_cap": config.retrieval.query_row_cap,
    }
    if isinstance(body, list):
        dataset = load_validation_dataset(_json.dumps(body))
    elif isinstance(body, dict):
        for key in ("top_k", "chunk_len", "seed", "judge"):
            if key in body:
                settings_kwargs[key] = body[key]
        if "items" in body:
            dataset = load_validation_dataset(_json.dumps(body["items"]))
        elif "path" in body:
            dataset = load_validation_dataset(Path(str(body["path"])))
        else:
            raise ValidationError("eval body needs 'items' or 'path'")
    else:
        raise ValidationError("eval body must be a JSON array or object")
    try:
        settings = EvalSettings(**settings_kwargs)
    except TypeError as exc:
        raise ValidationError(f"bad eval settings: {exc}") from exc
    return dataset, settings


def run_server(config: ServiceConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.listen_host, port=config.listen_port, log_level="warning")
