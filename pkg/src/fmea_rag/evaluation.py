"""Retrieval quality metrics and the three-pipeline comparison harness.

Context recall: the share of ground-truth sentences attributable to the
retrieved contexts. Context precision: rank-weighted precision,

    CP = (1 / #relevant) * sum over positions m of precision@m * r_m

where r_m is 1 when the context at position m is relevant.

Judges decide attribution and relevance. The deterministic judge needs
no model: a sentence is attributable when at least 60% of its content
words occur in the concatenated contexts, and a context is relevant
when it contains any of the item's relevance key fragments,
case-insensitively. An LLM judge with the same interface is available
when a model is worth spending on.

The comparison harness runs each validation question through three
pipelines: a baseline that searches randomly chunked table text, the
store's vector search alone, and the full query-first pipeline.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Protocol, Sequence

import numpy as np

from .embedding import Embedder, cosine
from .errors import EvalConfigError, FmeaRagError, ValidationError
from .graph import KnowledgeGraph
from .llm import LlmClient
from .records import FmeaTable
from .retrieval import VECTOR_SEARCH, Inquiry, retrieve

BASELINE_RAG = "baseline-rag"
KG_VECTOR_ONLY = "kg-vector-only"
KG_FULL = "kg-full"

PIPELINES = (BASELINE_RAG, KG_VECTOR_ONLY, KG_FULL)

ATTRIBUTION_THRESHOLD = 0.6

# Function words ignored by the deterministic attribution judge. Numbers
# are never stopwords; they usually carry the answer.
STOPWORDS = frozenset(
    """
    a an the is are was were be been being of to in on at by for with and
    or as it its this that these those there here has have had do does did
    not no from into over under than then so such can could will would
    should may might must shall about all any each which what when where
    who whom why how
    """.split()
)

_SENTENCE_END = re.compile(r"(?<=[.!?])\s+")
_WORD = re.compile(r"[0-9a-z]+")

MIN_CHUNK_LEN = 20


def split_sentences(text: str) -> list[str]:
    """Split on . ! ? followed by whitespace or end of text."""
    parts = [part.strip() for part in _SENTENCE_END.split(text.strip())]
    return [part for part in parts if part]


def content_words(text: str) -> set[str]:
    words = set(_WORD.findall(text.lower()))
    return words - STOPWORDS


@dataclass(frozen=True)
class ValidationItem:
    """One evaluation question with verified ground truth."""

    question: str
    ground_truth: str
    relevance_key: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.question.strip():
            raise ValidationError("question must not be empty")
        if not self.ground_truth.strip():
            raise ValidationError("ground_truth must not be empty")


@dataclass(frozen=True)
class JudgeVerdict:
    attributable: tuple[bool, ...]
    relevant: tuple[bool, ...]


class Judge(Protocol):
    def attributable(self, sentence: str, contexts: Sequence[str]) -> bool: ...

    def relevant(self, context: str) -> bool: ...


class DeterministicJudge:
    """Word-overlap attribution, substring relevance. No model involved."""

    def __init__(self, relevance_key: Sequence[str], threshold: float = ATTRIBUTION_THRESHOLD):
        if not relevance_key:
            raise EvalConfigError(
                "the deterministic judge requires a non-empty relevance_key"
            )
        self._keys = tuple(key.lower() for key in relevance_key)
        self._threshold = threshold

    def attributable(self, sentence: str, contexts: Sequence[str]) -> bool:
        words = content_words(sentence)
        if not words:
            return False
        pool = content_words(" ".join(contexts))
        return len(words & pool) / len(words) >= self._threshold

    def relevant(self, context: str) -> bool:
        lowered = context.lower()
        return any(key in lowered for key in self._keys)


class LlmJudge:
    """Delegates both verdicts to a model as yes/no questions."""

    def __init__(self, item: ValidationItem, llm: LlmClient):
        self._item = item
        self._llm = llm

    def _yes(self, prompt: str) -> bool:
        return self._llm.complete(prompt).strip().lower().startswith("yes")

    def attributable(self, sentence: str, contexts: Sequence[str]) -> bool:
        block = "\n".join(contexts)
        return self._yes(
            "Judge attribution. Reply yes or no only.\n"
            f"Contexts:\n{block}\n"
            f"Can this sentence be attributed to the contexts above?\n{sentence}"
        )

    def relevant(self, context: str) -> bool:
        return self._yes(
            "Judge relevance. Reply yes or no only.\n"
            f"Question: {self._item.question}\n"
            f"Is this context relevant to the question?\n{context}"
        )


def judge_item(item: ValidationItem, contexts: Sequence[str], judge: Judge) -> JudgeVerdict:
    sentences = split_sentences(item.ground_truth)
    return JudgeVerdict(
        attributable=tuple(judge.attributable(s, contexts) for s in sentences),
        relevant=tuple(judge.relevant(c) for c in contexts),
    )


def context_recall(ground_truth: str, contexts: Sequence[str], judge: Judge) -> float:
    """Share of ground-truth sentences attributable to the contexts."""
    sentences = split_sentences(ground_truth)
    if not sentences:
        raise ValidationError("ground truth has no sentences")
    if not contexts:
        return 0.0
    attributed = sum(1 for s in sentences if judge.attributable(s, contexts))
    return attributed / len(sentences)


def precision_from_relevance(flags: Sequence[bool]) -> float:
    """Rank-weighted precision over an ordered relevance pattern."""
    if not flags:
        raise ValidationError("relevance pattern must not be empty")
    relevant_total = sum(1 for f in flags if f)
    if relevant_total == 0:
        return 0.0
    total = 0.0
    seen = 0
    for position, flag in enumerate(flags, start=1):
        if flag:
            seen += 1
            total += seen / position
    return total / relevant_total


def context_precision(contexts: Sequence[str], judge: Judge) -> float:
    if not contexts:
        raise ValidationError("contexts must not be empty")
    return precision_from_relevance([judge.relevant(c) for c in contexts])


# -- baseline index -------------------------------------------------------


def flat_table_text(table: FmeaTable) -> str:
    """The whole table as one text: tab-separated cells, newline rows."""
    rows = []
    for rec in table.records:
        rows.append(
            "\t".join(
                [
                    rec.process_step,
                    rec.failure_mode,
                    rec.failure_effect,
                    str(rec.severity),
                    rec.failure_cause,
                    str(rec.occurrence),
                    rec.failure_measure,
                    str(rec.detection),
                    str(rec.rpn),
                ]
            )
        )
    return "\n".join(rows)


def chunk_boundaries(length: int, chunk_len: int, seed: int) -> list[int]:
    """Chunk end offsets with +/-25% seeded jitter per boundary."""
    rng = random.Random(seed)
    boundaries = []
    position = 0
    while position < length:
        step = round(chunk_len * rng.uniform(0.75, 1.25))
        step = max(1, step)
        position = min(length, position + step)
        boundaries.append(position)
    return boundaries


def build_baseline_index(
    table: FmeaTable, embedder: Embedder, chunk_len: int = 200, seed: int = 7
) -> list[tuple[str, np.ndarray]]:
    """Random-size chunks over the flat table text, each embedded.

    The chunks are an exact partition: concatenating them reproduces the
    flat text. Chunk boundaries are deterministic for a given seed.
    """
    if chunk_len < MIN_CHUNK_LEN:
        raise ValidationError(f"chunk_len must be at least {MIN_CHUNK_LEN}")
    text = flat_table_text(table)
    if not text:
        return []
    index = []
    start = 0
    for end in chunk_boundaries(len(text), chunk_len, seed):
        chunk = text[start:end]
        index.append((chunk, embedder.embed(chunk)))
        start = end
    return index


def baseline_top_k(
    query_vector: np.ndarray, index: Sequence[tuple[str, np.ndarray]], k: int
) -> list[tuple[str, float]]:
    """Descending-score scan of the baseline index; ties keep index order."""
    scored = [
        (position, chunk, cosine(query_vector, vector))
        for position, (chunk, vector) in enumerate(index)
    ]
    scored.sort(key=lambda row: (-row[2], row[0]))
    return [(chunk, score) for _position, chunk, score in scored[:k]]


# -- the three-pipeline comparison ----------------------------------------


@dataclass(frozen=True)
class ItemResult:
    question: str
    pipeline: str
    context_recall: float
    context_precision: float
    provenance: str | None
    diagnostics: tuple[str, ...] = ()


@dataclass(frozen=True)
class PipelineScore:
    pipeline: str
    context_recall: float
    context_precision: float


@dataclass(frozen=True)
class EvalReport:
    items: tuple[ItemResult, ...]
    pipelines: tuple[PipelineScore, ...]
    metadata: dict


@dataclass(frozen=True)
class EvalSettings:
    top_k: int = 3
    chunk_len: int = 200
    seed: int = 7
    judge: str = "deterministic"  # or "llm"
    query_row_cap: int = 50


def load_validation_dataset(source: str | Path | IO[str]) -> list[ValidationItem]:
    """Read a JSON array of {question, ground_truth, relevance_key} items."""
    if hasattr(source, "read"):
        payload = json.load(source)
    else:
        text = Path(source).read_text(encoding="utf-8") if _looks_like_path(source) else source
        payload = json.loads(text)
    if not isinstance(payload, list) or not payload:
        raise ValidationError("validation dataset must be a non-empty JSON array")
    items = []
    for entry in payload:
        if not isinstance(entry, dict) or "question" not in entry or "ground_truth" not in entry:
            raise ValidationError(f"malformed dataset entry: {entry!r}")
        key = entry.get("relevance_key")
        if key is not None:
            if not isinstance(key, list) or not all(isinstance(k, str) for k in key):
                raise ValidationError(f"relevance_key must be a list of strings: {entry!r}")
            key = tuple(key)
        items.append(
            ValidationItem(
                question=entry["question"],
                ground_truth=entry["ground_truth"],
                relevance_key=key,
            )
        )
    return items


def _looks_like_path(source: str | Path) -> bool:
    if isinstance(source, Path):
        return True
    stripped = source.lstrip()
    return not stripped.startswith(("[", "{"))


def _make_judge(item: ValidationItem, settings: EvalSettings, llm: LlmClient) -> Judge:
    if settings.judge == "deterministic":
        if not item.relevance_key:
            raise EvalConfigError(
                f"item {item.question!r} has no relevance_key; the deterministic "
                "judge cannot score relevance without one"
            )
        return DeterministicJudge(item.relevance_key)
    if settings.judge == "llm":
        return LlmJudge(item, llm)
    raise EvalConfigError(f"unknown judge kind {settings.judge!r}")


def run_eval(
    dataset: Sequence[ValidationItem],
    graph: KnowledgeGraph,
    table: FmeaTable,
    llm: LlmClient,
    embedder: Embedder,
    settings: EvalSettings = EvalSettings(),
) -> EvalReport:
    """Score every dataset item under all three pipelines.

    A pipeline failure on one item scores that cell 0/0 with a
    diagnostic and the run continues.
    """
    if not dataset:
        raise ValidationError("dataset must not be empty")
    baseline = build_baseline_index(table, embedder, settings.chunk_len, settings.seed)
    results: list[ItemResult] = []
    for item in dataset:
        judge = _make_judge(item, settings, llm)
        for pipeline in PIPELINES:
            try:
                contexts, provenance, diagnostics = _run_pipeline(
                    pipeline, item, graph, llm, embedder, baseline, settings
                )
                recall = context_recall(item.ground_truth, contexts, judge)
                precision = context_precision(contexts, judge)
                results.append(
                    ItemResult(
                        question=item.question,
                        pipeline=pipeline,
                        context_recall=recall,
                        context_precision=precision,
                        provenance=provenance,
                        diagnostics=tuple(diagnostics),
                    )
                )
            except FmeaRagError as exc:
                results.append(
                    ItemResult(
                        question=item.question,
                        pipeline=pipeline,
                        context_recall=0.0,
                        context_precision=0.0,
                        provenance=None,
                        diagnostics=(f"pipeline-failure: {exc}",),
                    )
                )
    scores = []
    for pipeline in PIPELINES:
        rows = [r for r in results if r.pipeline == pipeline]
        scores.append(
            PipelineScore(
                pipeline=pipeline,
                context_recall=sum(r.context_recall for r in rows) / len(rows),
                context_precision=sum(r.context_precision for r in rows) / len(rows),
            )
        )
    metadata = {
        "items": len(dataset),
        "top_k": settings.top_k,
        "chunk_len": settings.chunk_len,
        "seed": settings.seed,
        "judge": settings.judge,
    }
    return EvalReport(items=tuple(results), pipelines=tuple(scores), metadata=metadata)


def _run_pipeline(
    pipeline: str,
    item: ValidationItem,
    graph: KnowledgeGraph,
    llm: LlmClient,
    embedder: Embedder,
    baseline: Sequence[tuple[str, np.ndarray]],
    settings: EvalSettings,
) -> tuple[list[str], str | None, list[str]]:
    if pipeline == BASELINE_RAG:
        if not baseline:
            raise ValidationError("baseline index is empty")
        hits = baseline_top_k(embedder.embed(item.question), baseline, settings.top_k)
        return [chunk for chunk, _score in hits], VECTOR_SEARCH, ["baseline-chunks"]
    inquiry = Inquiry(text=item.question, top_k=settings.top_k)
    outcome = retrieve(
        inquiry,
        graph,
        llm,
        embedder,
        enable_query_path=(pipeline == KG_FULL),
        query_row_cap=settings.query_row_cap,
    )
    return [c.text for c in outcome.contexts], outcome.provenance, outcome.diagnostics


def render_report(report: EvalReport) -> str:
    """Aligned plain-text table: per-pipeline means, then per-item rows."""
    lines = []
    header = ("pipeline", "context_recall", "context_precision")
    widths = [len(h) for h in header]
    rows = [
        (s.pipeline, f"{s.context_recall:.4f}", f"{s.context_precision:.4f}")
        for s in report.pipelines
    ]
    for row in rows:
        widths = [max(w, len(cell)) for w, cell in zip(widths, row)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines.append(fmt.format(*header))
    lines.append(fmt.format(*("-" * w for w in widths)))
    for row in rows:
        lines.append(fmt.format(*row))
    lines.append("")
    item_header = ("question", "pipeline", "CR", "CP", "provenance")
    item_rows = [
        (
            r.question[:48],
            r.pipeline,
            f"{r.context_recall:.3f}",
            f"{r.context_precision:.3f}",
            r.provenance or "-",
        )
        for r in report.items
    ]
    widths = [len(h) for h in item_header]
    for row in item_rows:
        widths = [max(w, len(cell)) for w, cell in zip(widths, row)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines.append(fmt.format(*item_header))
    lines.append(fmt.format(*("-" * w for w in widths)))
    for row in item_rows:
        lines.append(fmt.format(*row))
    return "\n".join(lines)
