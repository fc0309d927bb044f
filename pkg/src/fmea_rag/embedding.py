"""Per-mode text chunks and vector embeddings.

Each failure mode's subgraph is flattened into one text chunk. Segments
are "<Role label>: <symbol>" pairs joined by ", ", with rating literals
appended right after the node that owns them. Process step segments
come first, then the mode and the rest of the walk.

The default embedder is local and fully deterministic: feature hashing
of lowercased alphanumeric tokens into a fixed number of buckets,
L2-normalized. A remote HTTP embedder with the same interface is
available for real deployments.
"""

from __future__ import annotations

import hashlib
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Protocol

import numpy as np
import requests

from .errors import (
    DimensionMismatchError,
    EmbedderUnavailableError,
    EmbeddingRunError,
    NoEmbeddingsError,
    ValidationError,
    ZeroVectorError,
)
from .graph import (
    FAILURE_CAUSE,
    FAILURE_EFFECT,
    FAILURE_MEASURE,
    FAILURE_MODE,
    PROCESS_STEP,
    KnowledgeGraph,
)

ROLE_LABELS = {
    PROCESS_STEP: "Process step",
    FAILURE_MODE: "Failure mode",
    FAILURE_EFFECT: "Failure effect",
    FAILURE_CAUSE: "Failure cause",
    FAILURE_MEASURE: "Failure measure",
}

# Rating literals rendered after their owning node, in this order.
RATING_SEGMENTS = {
    FAILURE_EFFECT: ("S",),
    FAILURE_CAUSE: ("O", "RPN"),
    FAILURE_MEASURE: ("D",),
}

MIN_DIMENSION = 8
DEFAULT_DIMENSION = 256
DEFAULT_SEED = 11

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


@dataclass(frozen=True)
class Chunk:
    mode_id: int
    text: str


def build_chunk(graph: KnowledgeGraph, mode_id: int) -> Chunk:
    """Flatten one mode's subgraph into a single text chunk.

    The walk order is the store's depth-first order except that process
    step segments are hoisted to the front, so a chunk reads
    "Process step: ..., Failure mode: ..., Failure effect: ..., S: n, ...".
    """
    nodes = graph.subgraph_of(mode_id)
    steps = [n for n in nodes if n.label == PROCESS_STEP]
    rest = [n for n in nodes if n.label != PROCESS_STEP]
    segments: list[str] = []
    for node in steps + rest:
        segments.append(f"{ROLE_LABELS[node.label]}: {node.symbol}")
        for literal in RATING_SEGMENTS.get(node.label, ()):
            value = node.literals.get(literal)
            if value is not None:
                segments.append(f"{literal}: {value}")
    return Chunk(mode_id=mode_id, text=", ".join(segments))


def build_all_chunks(graph: KnowledgeGraph) -> list[Chunk]:
    """Chunks for every failure mode, in node id order."""
    return [build_chunk(graph, node.id) for node in graph.nodes_by_label(FAILURE_MODE)]


class Embedder(Protocol):
    dimension: int
    kind: str

    def embed(self, text: str) -> np.ndarray: ...


class HashingEmbedder:
    """Deterministic local embedder: hashed token counts, L2-normalized.

    Identical text yields an identical vector on every run and platform;
    the token hash is keyed blake2, not the salted builtin hash.
    """

    kind = "local"

    def __init__(self, dimension: int = DEFAULT_DIMENSION, seed: int = DEFAULT_SEED):
        if dimension < MIN_DIMENSION:
            raise ValidationError(f"dimension must be at least {MIN_DIMENSION}")
        self.dimension = int(dimension)
        self._key = int(seed).to_bytes(8, "little", signed=False)

    def _bucket(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=self._key).digest()
        return int.from_bytes(digest, "little") % self.dimension

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise ValidationError("cannot embed empty text")
        tokens = [t for t in _TOKEN_SPLIT.split(text.lower()) if t]
        if not tokens:
            raise ValidationError("text has no alphanumeric tokens to embed")
        vector = np.zeros(self.dimension, dtype=np.float64)
        for token in tokens:
            vector[self._bucket(token)] += 1.0
        return vector / np.linalg.norm(vector)


class RemoteEmbedder:
    """HTTP embedder client. POSTs {model, input} and expects a vector back.

    Accepted response shapes: a bare JSON array, {"embedding": [...]}, or
    {"data": [{"embedding": [...]}]}.
    """

    kind = "remote"

    def __init__(
        self,
        endpoint: str,
        dimension: int,
        model: str | None = None,
        api_key: str | None = None,
        timeout: float = 30.0,
    ):
        if dimension < MIN_DIMENSION:
            raise ValidationError(f"dimension must be at least {MIN_DIMENSION}")
        self.endpoint = endpoint
        self.dimension = int(dimension)
        self.model = model
        self.timeout = timeout
        self._headers = {"Content-Type": "application/json"}
        if api_key:
            self._headers["Authorization"] = f"Bearer {api_key}"

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise ValidationError("cannot embed empty text")
        try:
            response = requests.post(
                self.endpoint,
                json={"model": self.model, "input": text},
                headers=self._headers,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise EmbedderUnavailableError(f"embedding endpoint unreachable: {exc}") from exc
        if response.status_code != 200:
            raise EmbedderUnavailableError(
                f"embedding endpoint returned {response.status_code}: {response.text[:200]}"
            )
        try:
            body = response.json()
        except ValueError as exc:
            raise EmbedderUnavailableError("embedding endpoint returned non-JSON body") from exc
        if isinstance(body, list):
            values = body
        elif isinstance(body, dict) and "embedding" in body:
            values = body["embedding"]
        elif isinstance(body, dict) and body.get("data"):
            values = body["data"][0].get("embedding")
        else:
            raise EmbedderUnavailableError("embedding endpoint response has no vector")
        vector = np.asarray(values, dtype=np.float64)
        if vector.ndim != 1 or vector.size != self.dimension:
            raise DimensionMismatchError(
                f"endpoint returned dimension {vector.size}, configured {self.dimension}"
            )
        return vector


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]. Undefined (raises) for zero vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"vector shapes differ: {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVectorError("cosine similarity is undefined for zero vectors")
    return float(np.dot(a, b) / (norm_a * norm_b))


def top_k(
    query_vector: np.ndarray, graph: KnowledgeGraph, k: int
) -> list[tuple[int, str, float]]:
    """Exact top-k scan over every stored embedding.

    Returns (mode id, chunk text, score) rows in descending score order,
    score ties broken by ascending mode id. Fewer than k embeddings
    return them all.
    """
    if k < 1:
        raise ValidationError("k must be at least 1")
    entries = graph.embeddings()
    if not entries:
        raise NoEmbeddingsError("store has no embeddings to search")
    scored = []
    for mode_id, emb_id, vector in entries:
        chunk = graph.node(emb_id).literals["chunk"]
        scored.append((mode_id, chunk, cosine(query_vector, vector)))
    scored.sort(key=lambda row: (-row[2], row[0]))
    return scored[:k]


def embed_all(graph: KnowledgeGraph, embedder: Embedder, max_workers: int = 1) -> int:
    """Build and attach an embedding for every failure mode.

    Re-running replaces existing embeddings. If the embedder fails part
    way, the run aborts with EmbeddingRunError naming the modes that
    were completed before the failure.
    """
    chunks = build_all_chunks(graph)
    completed: list[int] = []
    if max_workers > 1:
        executor = ThreadPoolExecutor(max_workers=max_workers)
        try:
            results = executor.map(lambda c: embedder.embed(c.text), chunks)
            try:
                for chunk, vector in zip(chunks, results):
                    graph.attach_embedding(chunk.mode_id, chunk.text, vector)
                    completed.append(chunk.mode_id)
            except (EmbedderUnavailableError, ValidationError, DimensionMismatchError) as exc:
                raise EmbeddingRunError(str(exc), completed) from exc
        finally:
            executor.shutdown(wait=False, cancel_futures=True)
        return len(completed)
    for chunk in chunks:
        try:
            vector = embedder.embed(chunk.text)
        except (EmbedderUnavailableError, ValidationError, DimensionMismatchError) as exc:
            raise EmbeddingRunError(str(exc), completed) from exc
        graph.attach_embedding(chunk.mode_id, chunk.text, vector)
        completed.append(chunk.mode_id)
    return len(completed)
