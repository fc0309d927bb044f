"""Exception types shared across the package.

Every error raised on purpose derives from FmeaRagError so callers can
distinguish domain failures (exit code 1, HTTP 4xx) from genuine bugs.
"""

from __future__ import annotations


class FmeaRagError(Exception):
    """Base class for all deliberate failures in this package."""


class CsvParseError(FmeaRagError):
    """Malformed CSV input. Carries the 1-based data row number when known."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class ValidationError(FmeaRagError):
    """A value violates a field constraint (range, emptiness, type)."""


class ConsistencyError(FmeaRagError):
    """Stored data contradicts a derived value, e.g. a wrong RPN cell."""


class SchemaViolationError(FmeaRagError):
    """A node or relation breaks the closed graph schema."""


class NodeNotFoundError(FmeaRagError):
    """Referenced node id does not exist in the store."""


class DuplicateTripleError(FmeaRagError):
    """The exact (head, type, tail) triple is already present."""


class LiteralConflictError(FmeaRagError):
    """Two rows assign different values to the same literal of one node."""


class DimensionMismatchError(FmeaRagError):
    """Vector length differs from the store-wide embedding dimension."""


class StoreFormatError(FmeaRagError):
    """Persisted store file is corrupt or structurally invalid."""


class StoreVersionError(StoreFormatError):
    """Persisted store file declares an unsupported format version."""


class QueryError(FmeaRagError):
    """Base class for query language failures."""


class QuerySyntaxError(QueryError):
    """Token-level or grammar-level parse failure with source position."""

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class QueryBindingError(QueryError):
    """A variable is used in WHERE/RETURN/ORDER BY without being matched."""


class MixedAggregateError(QueryError):
    """RETURN mixes aggregate and non-aggregate items."""


class QueryExecutionError(QueryError):
    """Well-formed query cannot be evaluated, e.g. unknown label."""


class ZeroVectorError(FmeaRagError):
    """Cosine similarity is undefined for a zero-length vector."""


class NoEmbeddingsError(FmeaRagError):
    """Vector search requested against a store with no embeddings."""


class EmbedderUnavailableError(FmeaRagError):
    """Embedding backend failed or cannot be reached."""


class EmbeddingRunError(EmbedderUnavailableError):
    """Bulk embedding aborted part-way. Lists modes finished before the abort."""

    def __init__(self, message: str, completed_modes: list[int]):
        self.completed_modes = completed_modes
        super().__init__(f"{message} (completed modes: {completed_modes})")


class LlmUnavailableError(FmeaRagError):
    """Language model backend failed or cannot be reached."""

    def __init__(self, message: str, stage: str = "completion"):
        self.stage = stage
        super().__init__(message)


class EmptyContextsError(FmeaRagError):
    """No context could be assembled for answer generation."""


class EvalConfigError(FmeaRagError):
    """Evaluation run is misconfigured, e.g. judge inputs missing."""


class ConfigError(FmeaRagError):
    """Service configuration file is invalid."""
