"""In-memory knowledge graph over failure-analysis rows.

The schema is closed. Content nodes carry one of five labels; a sixth
label holds vector embeddings attached to failure modes. Nodes are
deduplicated by (label, canonical symbol text), so a cause text shared
by many rows becomes a single node with many incoming triples.

Rating literals live on the node that owns the rating: S on the effect,
O and RPN on the cause, D on the measure.

Concurrency contract: any number of concurrent readers, but writes
(adding rows, attaching embeddings) must be externally serialized and
must not overlap reads. The HTTP service satisfies this by building a
new store and swapping one reference.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterator

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicateTripleError,
    LiteralConflictError,
    NodeNotFoundError,
    SchemaViolationError,
    StoreFormatError,
    StoreVersionError,
    ValidationError,
)
from .records import FmeaTable, canonical_text

FAILURE_MODE = "FailureMode"
FAILURE_EFFECT = "FailureEffect"
FAILURE_CAUSE = "FailureCause"
FAILURE_MEASURE = "FailureMeasure"
PROCESS_STEP = "ProcessStep"
VECTOR_EMBEDDING = "VectorEmbedding"

CONTENT_LABELS = (FAILURE_MODE, FAILURE_EFFECT, FAILURE_CAUSE, FAILURE_MEASURE, PROCESS_STEP)
ALL_LABELS = CONTENT_LABELS + (VECTOR_EMBEDDING,)

IS_DUE_TO_FAILURE_CAUSE = "isDueToFailureCause"
IS_IMPROVED_BY_FAILURE_MEASURE = "isImprovedByFailureMeasure"
RESULTS_IN_FAILURE_EFFECT = "resultsInFailureEffect"
OCCURS_AT_PROCESS_STEP = "occursAtProcessStep"
HAS_VECTOR_EMBEDDING = "hasVectorEmbedding"

CONTENT_RELATIONS = (
    IS_DUE_TO_FAILURE_CAUSE,
    IS_IMPROVED_BY_FAILURE_MEASURE,
    RESULTS_IN_FAILURE_EFFECT,
    OCCURS_AT_PROCESS_STEP,
)
ALL_RELATIONS = CONTENT_RELATIONS + (HAS_VECTOR_EMBEDDING,)

# head label, tail label for each relation type
ENDPOINT_RULES: dict[str, tuple[str, str]] = {
    IS_DUE_TO_FAILURE_CAUSE: (FAILURE_MODE, FAILURE_CAUSE),
    IS_IMPROVED_BY_FAILURE_MEASURE: (FAILURE_CAUSE, FAILURE_MEASURE),
    RESULTS_IN_FAILURE_EFFECT: (FAILURE_MODE, FAILURE_EFFECT),
    OCCURS_AT_PROCESS_STEP: (FAILURE_MODE, PROCESS_STEP),
    HAS_VECTOR_EMBEDDING: (FAILURE_MODE, VECTOR_EMBEDDING),
}

# Literal names each label may carry, used when validating stored files.
LITERAL_NAMES: dict[str, tuple[str, ...]] = {
    FAILURE_EFFECT: ("S",),
    FAILURE_CAUSE: ("O", "RPN"),
    FAILURE_MEASURE: ("D",),
    FAILURE_MODE: (),
    PROCESS_STEP: (),
    VECTOR_EMBEDDING: ("chunk", "embedding"),
}

# Child expansion order for the per-mode traversal.
MODE_CHILD_RELATIONS = (OCCURS_AT_PROCESS_STEP, RESULTS_IN_FAILURE_EFFECT, IS_DUE_TO_FAILURE_CAUSE)

FORMAT_VERSION = 1


@dataclass
class Node:
    """Graph node. Literal values are int, float, str or a numpy vector."""

    id: int
    label: str
    symbol: str
    literals: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Triple:
    head: int
    type: str
    tail: int


@dataclass(frozen=True)
class LabelDegreeRow:
    label: str
    node_count: int
    min_relationships: int
    max_relationships: int
    avg_relationships: float


@dataclass(frozen=True)
class GraphStats:
    rows: tuple[LabelDegreeRow, ...]
    total_nodes: int
    total_relationships: int
    unique_path_count: int


def _literals_equal(a, b) -> bool:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return isinstance(a, np.ndarray) and isinstance(b, np.ndarray) and np.array_equal(a, b)
    return a == b


class KnowledgeGraph:
    """Mutable graph store with label and adjacency indexes."""

    def __init__(self, embedding_dimension: int | None = None):
        self._nodes: dict[int, Node] = {}
        self._triples: list[Triple] = []
        self._triple_set: set[Triple] = set()
        self._by_label: dict[str, list[int]] = defaultdict(list)
        self._symbol_index: dict[tuple[str, str], int] = {}
        self._out: dict[int, dict[str, list[int]]] = {}
        self._in: dict[int, dict[str, list[int]]] = {}
        self._vectors: dict[int, tuple[int, np.ndarray]] = {}
        self._next_id = 1
        self.embedding_dimension = embedding_dimension

    # -- nodes ---------------------------------------------------------

    def node(self, node_id: int) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise NodeNotFoundError(f"no node with id {node_id}") from None

    def has_node(self, node_id: int) -> bool:
        return node_id in self._nodes

    def nodes(self) -> Iterator[Node]:
        """All nodes in ascending id order."""
        for node_id in sorted(self._nodes):
            yield self._nodes[node_id]

    def nodes_by_label(self, label: str) -> list[Node]:
        return [self._nodes[i] for i in self._by_label.get(label, ())]

    def find_node(self, label: str, symbol: str) -> Node | None:
        """Look up a content node by label and symbol text (canonicalized)."""
        node_id = self._symbol_index.get((label, canonical_text(symbol)))
        return self._nodes[node_id] if node_id is not None else None

    def add_node(self, label: str, symbol: str, literals: dict | None = None) -> int:
        """Create or reuse the content node for (label, canonical symbol).

        Literals are merged into the node; assigning a different value to
        an already-set literal raises LiteralConflictError.
        """
        if label not in CONTENT_LABELS:
            raise SchemaViolationError(
                f"add_node only accepts content labels, got {label!r}"
            )
        symbol = canonical_text(symbol)
        if not symbol:
            raise ValidationError("node symbol must not be empty")
        key = (label, symbol)
        node_id = self._symbol_index.get(key)
        if node_id is None:
            node_id = self._insert_node(label, symbol)
            self._symbol_index[key] = node_id
        if literals:
            node = self._nodes[node_id]
            for name, value in literals.items():
                current = node.literals.get(name)
                if current is not None and not _literals_equal(current, value):
                    raise LiteralConflictError(
                        f"{label} {symbol!r}: literal {name} already {current!r}, "
                        f"conflicting value {value!r}"
                    )
                node.literals[name] = value
        return node_id

    def _insert_node(self, label: str, symbol: str, literals: dict | None = None) -> int:
        node_id = self._next_id
        self._next_id += 1
        self._nodes[node_id] = Node(node_id, label, symbol, dict(literals or {}))
        self._by_label[label].append(node_id)
        return node_id

    def _remove_embedding_node(self, node_id: int) -> None:
        node = self._nodes.pop(node_id)
        assert node.label == VECTOR_EMBEDDING
        self._by_label[VECTOR_EMBEDDING].remove(node_id)
        gone = [t for t in self._triples if t.head == node_id or t.tail == node_id]
        for triple in gone:
            self._triples.remove(triple)
            self._triple_set.discard(triple)
            self._out.get(triple.head, {}).get(triple.type, []).remove(triple.tail)
            self._in.get(triple.tail, {}).get(triple.type, []).remove(triple.head)
        self._out.pop(node_id, None)
        self._in.pop(node_id, None)

    # -- triples -------------------------------------------------------

    def triples(self) -> tuple[Triple, ...]:
        return tuple(self._triples)

    def has_triple(self, head: int, rel_type: str, tail: int) -> bool:
        return Triple(head, rel_type, tail) in self._triple_set

    def add_triple(self, head: int, rel_type: str, tail: int) -> Triple:
        """Insert a triple, validating the endpoint rule. Duplicates raise."""
        if rel_type not in ENDPOINT_RULES:
            raise SchemaViolationError(f"unknown relation type {rel_type!r}")
        head_node = self.node(head)
        tail_node = self.node(tail)
        want_head, want_tail = ENDPOINT_RULES[rel_type]
        if head_node.label != want_head or tail_node.label != want_tail:
            raise SchemaViolationError(
                f"{rel_type} must connect {want_head} to {want_tail}, "
                f"got {head_node.label} to {tail_node.label}"
            )
        triple = Triple(head, rel_type, tail)
        if triple in self._triple_set:
            raise DuplicateTripleError(f"triple already present: {triple}")
        self._insert_triple(triple)
        return triple

    def ensure_triple(self, head: int, rel_type: str, tail: int) -> Triple:
        """Like add_triple but idempotent, for row-by-row loading."""
        if self.has_triple(head, rel_type, tail):
            return Triple(head, rel_type, tail)
        return self.add_triple(head, rel_type, tail)

    def _insert_triple(self, triple: Triple) -> None:
        self._triples.append(triple)
        self._triple_set.add(triple)
        self._out.setdefault(triple.head, {}).setdefault(triple.type, []).append(triple.tail)
        self._in.setdefault(triple.tail, {}).setdefault(triple.type, []).append(triple.head)

    def out_ids(self, node_id: int, rel_type: str) -> tuple[int, ...]:
        return tuple(self._out.get(node_id, {}).get(rel_type, ()))

    def in_ids(self, node_id: int, rel_type: str) -> tuple[int, ...]:
        return tuple(self._in.get(node_id, {}).get(rel_type, ()))

    # -- derived views -------------------------------------------------

    @property
    def content_node_count(self) -> int:
        return len(self._nodes) - len(self._by_label.get(VECTOR_EMBEDDING, ()))

    @property
    def content_triple_count(self) -> int:
        return sum(1 for t in self._triples if t.type != HAS_VECTOR_EMBEDDING)

    def subgraph_of(self, mode_id: int) -> list[Node]:
        """Depth-first preorder walk of one failure mode's subgraph.

        Children expand in the fixed relation order step, effect, cause;
        causes expand into their measures. Siblings are visited in
        ascending symbol order and every node appears exactly once.
        """
        root = self.node(mode_id)
        if root.label != FAILURE_MODE:
            raise SchemaViolationError(
                f"subgraph root must be a {FAILURE_MODE}, got {root.label}"
            )
        seen: set[int] = set()
        order: list[Node] = []

        def visit(node_id: int) -> None:
            if node_id in seen:
                return
            seen.add(node_id)
            node = self._nodes[node_id]
            order.append(node)
            if node.label == FAILURE_MODE:
                relations = MODE_CHILD_RELATIONS
            elif node.label == FAILURE_CAUSE:
                relations = (IS_IMPROVED_BY_FAILURE_MEASURE,)
            else:
                relations = ()
            for rel_type in relations:
                children = sorted(
                    self._out.get(node_id, {}).get(rel_type, ()),
                    key=lambda i: self._nodes[i].symbol,
                )
                for child in children:
                    visit(child)

        visit(mode_id)
        return order

    def unique_paths(self) -> list[frozenset[Triple]]:
        """Deduplicated per-mode triple sets, in mode id order.

        A mode's set holds every content triple reachable from it:
        its own outgoing triples plus the measure triples of each of
        its causes. Modes whose sets coincide contribute one entry.
        """
        result: list[frozenset[Triple]] = []
        seen: set[frozenset[Triple]] = set()
        for mode_id in self._by_label.get(FAILURE_MODE, ()):
            triples: set[Triple] = set()
            for rel_type in MODE_CHILD_RELATIONS:
                for tail in self._out.get(mode_id, {}).get(rel_type, ()):
                    triples.add(Triple(mode_id, rel_type, tail))
            for cause in self._out.get(mode_id, {}).get(IS_DUE_TO_FAILURE_CAUSE, ()):
                for measure in self._out.get(cause, {}).get(IS_IMPROVED_BY_FAILURE_MEASURE, ()):
                    triples.add(Triple(cause, IS_IMPROVED_BY_FAILURE_MEASURE, measure))
            frozen = frozenset(triples)
            if frozen not in seen:
                seen.add(frozen)
                result.append(frozen)
        return result

    def stats(self) -> GraphStats:
        """Degree statistics per content label, plus totals.

        Embedding nodes and hasVectorEmbedding triples are excluded
        everywhere; averages are rounded to two decimals.
        """
        degree: dict[int, int] = defaultdict(int)
        content_triples = 0
        for triple in self._triples:
            if triple.type == HAS_VECTOR_EMBEDDING:
                continue
            content_triples += 1
            degree[triple.head] += 1
            degree[triple.tail] += 1
        rows = []
        for label in (FAILURE_MODE, FAILURE_EFFECT, FAILURE_CAUSE, FAILURE_MEASURE, PROCESS_STEP):
            ids = self._by_label.get(label, [])
            degrees = [degree[i] for i in ids]
            if degrees:
                avg = round(sum(degrees) / len(degrees), 2)
                row = LabelDegreeRow(label, len(ids), min(degrees), max(degrees), avg)
            else:
                row = LabelDegreeRow(label, 0, 0, 0, 0.0)
            rows.append(row)
        return GraphStats(
            rows=tuple(rows),
            total_nodes=self.content_node_count,
            total_relationships=content_triples,
            unique_path_count=len(self.unique_paths()),
        )

    # -- embeddings ----------------------------------------------------

    def attach_embedding(self, mode_id: int, chunk: str, vector) -> int:
        """Attach (or replace) the embedding node for one failure mode."""
        mode = self.node(mode_id)
        if mode.label != FAILURE_MODE:
            raise SchemaViolationError(f"embeddings attach to {FAILURE_MODE} nodes only")
        if not chunk:
            raise ValidationError("chunk text must not be empty")
        vec = np.asarray(vector, dtype=np.float64)
        if vec.ndim != 1 or vec.size == 0:
            raise ValidationError("embedding must be a non-empty 1-d vector")
        if not np.all(np.isfinite(vec)):
            raise ValidationError("embedding values must be finite")
        if self.embedding_dimension is None:
            self.embedding_dimension = int(vec.size)
        elif vec.size != self.embedding_dimension:
            raise DimensionMismatchError(
                f"vector has dimension {vec.size}, store uses {self.embedding_dimension}"
            )
        previous = self._vectors.get(mode_id)
        if previous is not None:
            self._remove_embedding_node(previous[0])
        emb_id = self._insert_node(
            VECTOR_EMBEDDING, mode.symbol, {"chunk": chunk, "embedding": vec}
        )
        self._insert_triple(Triple(mode_id, HAS_VECTOR_EMBEDDING, emb_id))
        self._vectors[mode_id] = (emb_id, vec)
        return emb_id

    def embeddings(self) -> list[tuple[int, int, np.ndarray]]:
        """(mode id, embedding node id, vector) rows in mode id order."""
        return [(m, e, v) for m, (e, v) in sorted(self._vectors.items())]

    def embedding_for(self, mode_id: int) -> tuple[int, np.ndarray] | None:
        return self._vectors.get(mode_id)

    @property
    def embedding_count(self) -> int:
        return len(self._vectors)

    # -- persistence ---------------------------------------------------

    def to_payload(self) -> dict:
        nodes = []
        for node in self.nodes():
            literals = {}
            for name, value in node.literals.items():
                if isinstance(value, np.ndarray):
                    literals[name] = [float(x) for x in value]
                else:
                    literals[name] = value
            nodes.append(
                {"id": node.id, "label": node.label, "symbol": node.symbol, "literals": literals}
            )
        triples = [
            {"head": t.head, "type": t.type, "tail": t.tail} for t in self._triples
        ]
        return {
            "format_version": FORMAT_VERSION,
            "embedding_dimension": self.embedding_dimension,
            "nodes": nodes,
            "triples": triples,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "KnowledgeGraph":
        if not isinstance(payload, dict):
            raise StoreFormatError("store payload must be an object")
        version = payload.get("format_version")
        if version != FORMAT_VERSION:
            raise StoreVersionError(
                f"unsupported format_version {version!r}, expected {FORMAT_VERSION}"
            )
        for key in ("nodes", "triples"):
            if not isinstance(payload.get(key), list):
                raise StoreFormatError(f"store payload missing list field {key!r}")
        dimension = payload.get("embedding_dimension")
        if dimension is not None and (not isinstance(dimension, int) or dimension <= 0):
            raise StoreFormatError("embedding_dimension must be a positive integer or null")
        graph = cls(embedding_dimension=dimension)
        for entry in payload["nodes"]:
            try:
                node_id, label, symbol = entry["id"], entry["label"], entry["symbol"]
                literals = entry.get("literals", {})
            except (TypeError, KeyError) as exc:
                raise StoreFormatError(f"malformed node entry: {entry!r}") from exc
            if label not in ALL_LABELS:
                raise StoreFormatError(f"unknown node label {label!r}")
            if not isinstance(node_id, int) or node_id in graph._nodes:
                raise StoreFormatError(f"bad or duplicate node id {node_id!r}")
            if not isinstance(symbol, str) or not symbol:
                raise StoreFormatError(f"node {node_id}: symbol must be a non-empty string")
            decoded = {}
            for name, value in dict(literals).items():
                if isinstance(value, list):
                    vec = np.asarray(value, dtype=np.float64)
                    if vec.ndim != 1 or not np.all(np.isfinite(vec)):
                        raise StoreFormatError(f"node {node_id}: bad vector literal {name!r}")
                    decoded[name] = vec
                elif isinstance(value, (int, float, str)):
                    decoded[name] = value
                else:
                    raise StoreFormatError(f"node {node_id}: bad literal {name!r}")
            graph._nodes[node_id] = Node(node_id, label, symbol, decoded)
            graph._by_label[label].append(node_id)
            if label != VECTOR_EMBEDDING:
                graph._symbol_index[(label, symbol)] = node_id
            graph._next_id = max(graph._next_id, node_id + 1)
        for entry in payload["triples"]:
            try:
                head, rel_type, tail = entry["head"], entry["type"], entry["tail"]
            except (TypeError, KeyError) as exc:
                raise StoreFormatError(f"malformed triple entry: {entry!r}") from exc
            if rel_type not in ENDPOINT_RULES:
                raise StoreFormatError(f"unknown relation type {rel_type!r}")
            if head not in graph._nodes or tail not in graph._nodes:
                raise StoreFormatError(f"triple references missing node: {entry!r}")
            triple = Triple(head, rel_type, tail)
            if triple in graph._triple_set:
                raise StoreFormatError(f"duplicate triple in store file: {entry!r}")
            want_head, want_tail = ENDPOINT_RULES[rel_type]
            if graph._nodes[head].label != want_head or graph._nodes[tail].label != want_tail:
                raise StoreFormatError(f"triple violates endpoint rule: {entry!r}")
            graph._insert_triple(triple)
        for triple in graph._triples:
            if triple.type != HAS_VECTOR_EMBEDDING:
                continue
            emb_node = graph._nodes[triple.tail]
            vector = emb_node.literals.get("embedding")
            chunk = emb_node.literals.get("chunk")
            if not isinstance(vector, np.ndarray) or not isinstance(chunk, str):
                raise StoreFormatError(
                    f"embedding node {triple.tail} must carry chunk text and a vector"
                )
            if graph.embedding_dimension is not None and vector.size != graph.embedding_dimension:
                raise StoreFormatError(
                    f"embedding node {triple.tail} has dimension {vector.size}, "
                    f"store declares {graph.embedding_dimension}"
                )
            if triple.head in graph._vectors:
                raise StoreFormatError(f"mode {triple.head} has more than one embedding")
            graph._vectors[triple.head] = (triple.tail, vector)
        return graph


def transpose(table: FmeaTable) -> KnowledgeGraph:
    """Build the graph for a parsed table, row by row.

    Repeated texts collapse into shared nodes, repeated edges collapse
    into single triples. A shared node given two different rating values
    raises LiteralConflictError.
    """
    graph = KnowledgeGraph()
    for record in table.records:
        mode = graph.add_node(FAILURE_MODE, record.failure_mode)
        step = graph.add_node(PROCESS_STEP, record.process_step)
        effect = graph.add_node(FAILURE_EFFECT, record.failure_effect, {"S": record.severity})
        cause = graph.add_node(
            FAILURE_CAUSE, record.failure_cause, {"O": record.occurrence, "RPN": record.rpn}
        )
        measure = graph.add_node(FAILURE_MEASURE, record.failure_measure, {"D": record.detection})
        graph.ensure_triple(mode, OCCURS_AT_PROCESS_STEP, step)
        graph.ensure_triple(mode, RESULTS_IN_FAILURE_EFFECT, effect)
        graph.ensure_triple(mode, IS_DUE_TO_FAILURE_CAUSE, cause)
        graph.ensure_triple(cause, IS_IMPROVED_BY_FAILURE_MEASURE, measure)
    return graph


def save(graph: KnowledgeGraph, destination: str | Path | IO[str]) -> None:
    """Write the store as JSON. Vector values survive bit-exactly."""
    payload = graph.to_payload()
    if hasattr(destination, "write"):
        json.dump(payload, destination, indent=1)
    else:
        with open(destination, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=1)


def load(source: str | Path | IO[str]) -> KnowledgeGraph:
    """Read a store written by save(). Raises StoreFormatError on damage."""
    try:
        if hasattr(source, "read"):
            payload = json.load(source)
        else:
            with open(source, "r", encoding="utf-8") as handle:
                payload = json.load(handle)
    except json.JSONDecodeError as exc:
        raise StoreFormatError(f"store file is not valid JSON: {exc}") from exc
    return KnowledgeGraph.from_payload(payload)


def graphs_equal(a: KnowledgeGraph, b: KnowledgeGraph) -> bool:
    """Structural equality: same ids, labels, symbols, literals, triples."""
    if a.embedding_dimension != b.embedding_dimension:
        return False
    ids_a = [n.id for n in a.nodes()]
    ids_b = [n.id for n in b.nodes()]
    if ids_a != ids_b:
        return False
    for node_id in ids_a:
        na, nb = a.node(node_id), b.node(node_id)
        if (na.label, na.symbol) != (nb.label, nb.symbol):
            return False
        if set(na.literals) != set(nb.literals):
            return False
        if not all(_literals_equal(na.literals[k], nb.literals[k]) for k in na.literals):
            return False
    return set(a.triples()) == set(b.triples())
