"""A small pattern-match query language over the graph store.

Grammar (keywords case-insensitive, identifiers case-sensitive):

    query   := MATCH pattern
               (WHERE cond (AND cond)*)?
               RETURN item ("," item)*
               (ORDER BY item (ASC | DESC)?)?
               (LIMIT int)?
    pattern := node (edge node)*
    node    := "(" var (":" Label)? ("{" "name" ":" string "}")? ")"
    edge    := "-[" ":" RelType "]->"  |  "<-[" ":" RelType "]-"
    cond    := operand op operand          op: = <> < <= > >=
    operand := var "." prop | var | number | string
    item    := var | var "." prop | agg "(" (var | var "." prop) ")"
    agg     := count | sum | avg | min | max

Semantics notes, mirrored by the reference evaluator in the test suite:

* ``name`` is a pseudo-property that reads a node's symbol text, both in
  WHERE and RETURN and inside the ``{name: "..."}`` node filter.
* A missing literal evaluates to null; every comparison involving null,
  and every comparison between a number and a string, is false.
* WHERE is purely conjunctive.
* An aggregate query always yields exactly one row; count over zero
  matches is 0, sum over zero matches is 0, avg/min/max are null.
  Mixing aggregate and plain items in one RETURN is an error.
* Without ORDER BY, rows come out in match enumeration order (node
  insertion order, then triple insertion order). With ORDER BY, rows are
  sorted by the key with ties broken by the whole row tuple ascending.
  LIMIT applies last.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import (
    MixedAggregateError,
    QueryBindingError,
    QueryExecutionError,
    QuerySyntaxError,
)
from .graph import (
    ALL_LABELS,
    ALL_RELATIONS,
    CONTENT_LABELS,
    CONTENT_RELATIONS,
    ENDPOINT_RULES,
    KnowledgeGraph,
    Node,
)

KEYWORDS = {"MATCH", "WHERE", "AND", "RETURN", "ORDER", "BY", "ASC", "DESC", "LIMIT"}
AGGREGATES = ("count", "sum", "avg", "min", "max")
COMPARATORS = ("=", "<>", "<", "<=", ">", ">=")

NAME_PROP = "name"


# -- abstract syntax ----------------------------------------------------


@dataclass(frozen=True)
class PropertyRef:
    """A variable or a variable.property reference. prop None = bare var."""

    var: str
    prop: str | None = None

    def text(self) -> str:
        return self.var if self.prop is None else f"{self.var}.{self.prop}"


Operand = Union[PropertyRef, int, float, str]


@dataclass(frozen=True)
class NodePattern:
    var: str
    label: str | None = None
    symbol: str | None = None

    def text(self) -> str:
        parts = self.var
        if self.label:
            parts += f":{self.label}"
        if self.symbol is not None:
            parts += f' {{name: "{_escape(self.symbol)}"}}'
        return f"({parts})"


@dataclass(frozen=True)
class EdgePattern:
    rel_type: str
    outgoing: bool

    def text(self) -> str:
        if self.outgoing:
            return f"-[:{self.rel_type}]->"
        return f"<-[:{self.rel_type}]-"


@dataclass(frozen=True)
class Condition:
    lhs: Operand
    op: str
    rhs: Operand

    def text(self) -> str:
        return f"{_operand_text(self.lhs)} {self.op} {_operand_text(self.rhs)}"


@dataclass(frozen=True)
class ReturnItem:
    ref: PropertyRef
    aggregate: str | None = None

    def text(self) -> str:
        if self.aggregate is None:
            return self.ref.text()
        return f"{self.aggregate}({self.ref.text()})"


@dataclass(frozen=True)
class OrderBy:
    item: ReturnItem
    descending: bool = False

    def text(self) -> str:
        return f"ORDER BY {self.item.text()}{' DESC' if self.descending else ' ASC'}"


@dataclass(frozen=True)
class Query:
    nodes: tuple[NodePattern, ...]
    edges: tuple[EdgePattern, ...]
    where: tuple[Condition, ...] = ()
    returns: tuple[ReturnItem, ...] = ()
    order_by: OrderBy | None = None
    limit: int | None = None

    @property
    def is_aggregate(self) -> bool:
        return any(item.aggregate for item in self.returns)


@dataclass(frozen=True)
class QueryResult:
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace('"', '\\"')


def _operand_text(operand: Operand) -> str:
    if isinstance(operand, PropertyRef):
        return operand.text()
    if isinstance(operand, str):
        return f'"{_escape(operand)}"'
    return repr(operand)


def format_query(query: Query) -> str:
    """Canonical text for an AST; parse(format_query(q)) == q."""
    pattern = query.nodes[0].text()
    for edge, node in zip(query.edges, query.nodes[1:]):
        pattern += edge.text() + node.text()
    parts = [f"MATCH {pattern}"]
    if query.where:
        parts.append("WHERE " + " AND ".join(c.text() for c in query.where))
    parts.append("RETURN " + ", ".join(i.text() for i in query.returns))
    if query.order_by:
        parts.append(query.order_by.text())
    if query.limit is not None:
        parts.append(f"LIMIT {query.limit}")
    return " ".join(parts)


# -- lexer ---------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT NUMBER STRING PUNCT END
    value: str
    line: int
    column: int


_PUNCT_TWO = ("->", "<-", "<=", ">=", "<>")
_PUNCT_ONE = "()[]{}:,.=<>-"


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, column = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            column = 1
            i += 1
            continue
        if ch.isspace():
            column += 1
            i += 1
            continue
        start_line, start_column = line, column
        if ch == '"':
            value = []
            j = i + 1
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    value.append(text[j + 1])
                    j += 2
                elif text[j] == "\n":
                    raise QuerySyntaxError("unterminated string", start_line, start_column)
                else:
                    value.append(text[j])
                    j += 1
            if j >= n:
                raise QuerySyntaxError("unterminated string", start_line, start_column)
            tokens.append(Token("STRING", "".join(value), start_line, start_column))
            column += j + 1 - i
            i = j + 1
            continue
        if ch.isdigit():
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    # Keep "1." out: a dot must be followed by a digit.
                    if j + 1 >= n or not text[j + 1].isdigit():
                        break
                    seen_dot = True
                j += 1
            tokens.append(Token("NUMBER", text[i:j], start_line, start_column))
            column += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("IDENT", text[i:j], start_line, start_column))
            column += j - i
            i = j
            continue
        two = text[i : i + 2]
        if two in _PUNCT_TWO:
            tokens.append(Token("PUNCT", two, start_line, start_column))
            column += 2
            i += 2
            continue
        if ch in _PUNCT_ONE:
            tokens.append(Token("PUNCT", ch, start_line, start_column))
            column += 1
            i += 1
            continue
        raise QuerySyntaxError(f"unexpected character {ch!r}", start_line, start_column)
    tokens.append(Token("END", "", line, column))
    return tokens


# -- parser --------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        if token.kind != "END":
            self.pos += 1
        return token

    def fail(self, message: str) -> None:
        token = self.peek()
        raise QuerySyntaxError(message, token.line, token.column)

    def is_keyword(self, word: str) -> bool:
        token = self.peek()
        return token.kind == "IDENT" and token.value.upper() == word

    def expect_keyword(self, word: str) -> None:
        if not self.is_keyword(word):
            self.fail(f"expected {word}")
        self.advance()

    def expect_punct(self, value: str) -> None:
        token = self.peek()
        if token.kind != "PUNCT" or token.value != value:
            self.fail(f"expected {value!r}")
        self.advance()

    def at_punct(self, value: str) -> bool:
        token = self.peek()
        return token.kind == "PUNCT" and token.value == value

    def expect_ident(self, what: str) -> str:
        token = self.peek()
        if token.kind != "IDENT":
            self.fail(f"expected {what}")
        if token.value.upper() in KEYWORDS:
            self.fail(f"expected {what}, got keyword {token.value}")
        self.advance()
        return token.value

    # grammar productions

    def parse(self) -> Query:
        self.expect_keyword("MATCH")
        nodes, edges = self.parse_pattern()
        where: list[Condition] = []
        if self.is_keyword("WHERE"):
            self.advance()
            where.append(self.parse_condition())
            while self.is_keyword("AND"):
                self.advance()
                where.append(self.parse_condition())
        self.expect_keyword("RETURN")
        returns = [self.parse_return_item()]
        while self.at_punct(","):
            self.advance()
            returns.append(self.parse_return_item())
        order_by = None
        if self.is_keyword("ORDER"):
            self.advance()
            self.expect_keyword("BY")
            item = self.parse_return_item()
            descending = False
            if self.is_keyword("DESC"):
                descending = True
                self.advance()
            elif self.is_keyword("ASC"):
                self.advance()
            order_by = OrderBy(item, descending)
        limit = None
        if self.is_keyword("LIMIT"):
            self.advance()
            token = self.peek()
            if token.kind != "NUMBER" or "." in token.value:
                self.fail("expected a non-negative integer after LIMIT")
            limit = int(token.value)
            self.advance()
        if self.peek().kind != "END":
            self.fail("unexpected trailing input")
        query = Query(
            nodes=tuple(nodes),
            edges=tuple(edges),
            where=tuple(where),
            returns=tuple(returns),
            order_by=order_by,
            limit=limit,
        )
        _check_bindings(query)
        _check_aggregates(query)
        return query

    def parse_pattern(self) -> tuple[list[NodePattern], list[EdgePattern]]:
        nodes = [self.parse_node()]
        edges: list[EdgePattern] = []
        while self.at_punct("-") or self.at_punct("<-"):
            edges.append(self.parse_edge())
            nodes.append(self.parse_node())
        return nodes, edges

    def parse_node(self) -> NodePattern:
        self.expect_punct("(")
        var = self.expect_ident("variable name")
        label = None
        if self.at_punct(":"):
            self.advance()
            label = self.expect_ident("label")
        symbol = None
        if self.at_punct("{"):
            self.advance()
            key = self.expect_ident("name key")
            if key != NAME_PROP:
                raise QuerySyntaxError(
                    f"node filters support only {NAME_PROP!r}, got {key!r}",
                    self.tokens[self.pos - 1].line,
                    self.tokens[self.pos - 1].column,
                )
            self.expect_punct(":")
            token = self.peek()
            if token.kind != "STRING":
                self.fail("expected a quoted string value")
            symbol = token.value
            self.advance()
            self.expect_punct("}")
        self.expect_punct(")")
        return NodePattern(var, label, symbol)

    def parse_edge(self) -> EdgePattern:
        if self.at_punct("-"):
            self.advance()
            self.expect_punct("[")
            self.expect_punct(":")
            rel_type = self.expect_ident("relation type")
            self.expect_punct("]")
            self.expect_punct("->")
            return EdgePattern(rel_type, outgoing=True)
        self.expect_punct("<-")
        self.expect_punct("[")
        self.expect_punct(":")
        rel_type = self.expect_ident("relation type")
        self.expect_punct("]")
        self.expect_punct("-")
        return EdgePattern(rel_type, outgoing=False)

    def parse_condition(self) -> Condition:
        lhs = self.parse_operand()
        token = self.peek()
        if token.kind != "PUNCT" or token.value not in COMPARATORS:
            self.fail("expected a comparator (= <> < <= > >=)")
        self.advance()
        rhs = self.parse_operand()
        return Condition(lhs, token.value, rhs)

    def parse_operand(self) -> Operand:
        token = self.peek()
        if token.kind == "STRING":
            self.advance()
            return token.value
        if token.kind == "NUMBER":
            self.advance()
            return _number(token.value)
        if token.kind == "PUNCT" and token.value == "-":
            self.advance()
            number = self.peek()
            if number.kind != "NUMBER":
                self.fail("expected a number after '-'")
            self.advance()
            return -_number(number.value)
        var = self.expect_ident("variable, number or string")
        if self.at_punct("."):
            self.advance()
            prop = self.expect_ident("property name")
            return PropertyRef(var, prop)
        return PropertyRef(var)

    def parse_return_item(self) -> ReturnItem:
        token = self.peek()
        if (
            token.kind == "IDENT"
            and token.value.lower() in AGGREGATES
            and self.tokens[self.pos + 1].kind == "PUNCT"
            and self.tokens[self.pos + 1].value == "("
        ):
            aggregate = token.value.lower()
            self.advance()
            self.advance()
            ref = self.parse_ref()
            self.expect_punct(")")
            return ReturnItem(ref, aggregate)
        return ReturnItem(self.parse_ref())

    def parse_ref(self) -> PropertyRef:
        var = self.expect_ident("variable")
        if self.at_punct("."):
            self.advance()
            prop = self.expect_ident("property name")
            return PropertyRef(var, prop)
        return PropertyRef(var)


def _check_bindings(query: Query) -> None:
    bound = {node.var for node in query.nodes}

    def check_ref(ref: PropertyRef, where: str) -> None:
        if ref.var not in bound:
            raise QueryBindingError(f"variable {ref.var!r} in {where} is not bound by MATCH")

    for condition in query.where:
        for operand in (condition.lhs, condition.rhs):
            if isinstance(operand, PropertyRef):
                check_ref(operand, "WHERE")
    for item in query.returns:
        check_ref(item.ref, "RETURN")
    if query.order_by:
        check_ref(query.order_by.item.ref, "ORDER BY")


def _check_aggregates(query: Query) -> None:
    kinds = {item.aggregate is not None for item in query.returns}
    if kinds == {True, False}:
        raise MixedAggregateError("RETURN mixes aggregate and non-aggregate items")


def parse_query(text: str) -> Query:
    """Parse query text into an AST, or raise a QueryError subclass."""
    return _Parser(text).parse()


def _number(literal: str) -> int | float:
    return float(literal) if "." in literal else int(literal)


# -- evaluation ----------------------------------------------------------


def _value_of(node: Node, prop: str | None):
    """Projection value: bare variables read as the node symbol."""
    if prop is None or prop == NAME_PROP:
        return node.symbol
    return node.literals.get(prop)


def _compare(left, right, op: str) -> bool:
    if left is None or right is None:
        return False
    left_num = isinstance(left, (int, float)) and not isinstance(left, bool)
    right_num = isinstance(right, (int, float)) and not isinstance(right, bool)
    if left_num != right_num:
        return False
    if not left_num and not (isinstance(left, str) and isinstance(right, str)):
        return False
    if op == "=":
        return left == right
    if op == "<>":
        return left != right
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    raise QueryExecutionError(f"unknown comparator {op!r}")


def sort_key(value) -> tuple:
    """Total order over result values: numbers, then strings, then null."""
    if value is None:
        return (3, 0)
    if isinstance(value, bool):
        return (0, float(value))
    if isinstance(value, (int, float)):
        return (0, float(value))
    if isinstance(value, str):
        return (1, value)
    if isinstance(value, np.ndarray):
        return (2, tuple(float(x) for x in value))
    return (2, (repr(value),))


def row_sort_key(row: tuple) -> tuple:
    return tuple(sort_key(value) for value in row)


def _match_node(node: Node, pattern: NodePattern) -> bool:
    if pattern.label is not None and node.label != pattern.label:
        return False
    if pattern.symbol is not None and node.symbol != pattern.symbol:
        return False
    return True


def _enumerate_bindings(query: Query, graph: KnowledgeGraph) -> list[dict[str, int]]:
    first = query.nodes[0]
    if first.label is not None:
        candidates = [n.id for n in graph.nodes_by_label(first.label)]
    else:
        candidates = [n.id for n in graph.nodes()]
    bindings: list[dict[str, int]] = []
    for node_id in candidates:
        if _match_node(graph.node(node_id), first):
            bindings.append({first.var: node_id})
    for position, (edge, pattern) in enumerate(zip(query.edges, query.nodes[1:])):
        source_var = query.nodes[position].var
        next_bindings: list[dict[str, int]] = []
        for binding in bindings:
            current = binding[source_var]
            if edge.outgoing:
                neighbors = graph.out_ids(current, edge.rel_type)
            else:
                neighbors = graph.in_ids(current, edge.rel_type)
            for neighbor in neighbors:
                if not _match_node(graph.node(neighbor), pattern):
                    continue
                if pattern.var in binding:
                    if binding[pattern.var] != neighbor:
                        continue
                    next_bindings.append(dict(binding))
                else:
                    extended = dict(binding)
                    extended[pattern.var] = neighbor
                    next_bindings.append(extended)
        bindings = next_bindings
    return bindings


def _operand_value(operand: Operand, binding: dict[str, int], graph: KnowledgeGraph):
    if isinstance(operand, PropertyRef):
        return _value_of(graph.node(binding[operand.var]), operand.prop)
    return operand


def _check_schema_names(query: Query, graph: KnowledgeGraph) -> None:
    for node in query.nodes:
        if node.label is not None and node.label not in ALL_LABELS:
            raise QueryExecutionError(f"unknown label {node.label!r}")
    for edge in query.edges:
        if edge.rel_type not in ALL_RELATIONS:
            raise QueryExecutionError(f"unknown relation type {edge.rel_type!r}")


def _aggregate(values: list, aggregate: str):
    present = [v for v in values if v is not None]
    if aggregate == "sum":
        total = 0
        for value in present:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise QueryExecutionError("sum requires numeric values")
            total += value
        return total
    if aggregate == "avg":
        numeric = []
        for value in present:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise QueryExecutionError("avg requires numeric values")
            numeric.append(value)
        if not numeric:
            return None
        return sum(numeric) / len(numeric)
    if aggregate in ("min", "max"):
        if not present:
            return None
        chooser = min if aggregate == "min" else max
        return chooser(present, key=sort_key)
    raise QueryExecutionError(f"unknown aggregate {aggregate!r}")


def execute(query: Query, graph: KnowledgeGraph) -> QueryResult:
    """Evaluate a parsed query against a graph."""
    _check_schema_names(query, graph)
    bindings = _enumerate_bindings(query, graph)
    kept = []
    for binding in bindings:
        if all(
            _compare(
                _operand_value(c.lhs, binding, graph),
                _operand_value(c.rhs, binding, graph),
                c.op,
            )
            for c in query.where
        ):
            kept.append(binding)

    columns = tuple(item.text() for item in query.returns)

    if query.is_aggregate:
        row = []
        for item in query.returns:
            if item.aggregate == "count" and item.ref.prop is None:
                row.append(len(kept))
                continue
            values = [_value_of(graph.node(b[item.ref.var]), item.ref.prop) for b in kept]
            if item.aggregate == "count":
                row.append(len([v for v in values if v is not None]))
            else:
                row.append(_aggregate(values, item.aggregate))
        rows = [tuple(row)]
        if query.limit is not None:
            rows = rows[: query.limit]
        return QueryResult(columns=columns, rows=tuple(rows))

    rows = [
        tuple(_value_of(graph.node(b[item.ref.var]), item.ref.prop) for item in query.returns)
        for b in kept
    ]
    if query.order_by is not None:
        if query.order_by.item.aggregate is not None:
            raise QueryExecutionError("cannot ORDER BY an aggregate in a non-aggregate query")
        ref = query.order_by.item.ref
        keys = [sort_key(_value_of(graph.node(b[ref.var]), ref.prop)) for b in kept]
        decorated = sorted(zip(keys, rows), key=lambda pair: row_sort_key(pair[1]))
        decorated.sort(key=lambda pair: pair[0], reverse=query.order_by.descending)
        rows = [row for _key, row in decorated]
    if query.limit is not None:
        rows = rows[: query.limit]
    return QueryResult(columns=columns, rows=tuple(rows))


def run_query(text: str, graph: KnowledgeGraph) -> QueryResult:
    return execute(parse_query(text), graph)


# -- schema description ---------------------------------------------------


def schema_text() -> str:
    """Stable description of the content schema, used in model prompts."""
    lines = ["Node labels with their properties:"]
    label_props = {
        "FailureMode": ("name",),
        "FailureEffect": ("name", "S"),
        "FailureCause": ("name", "O", "RPN"),
        "FailureMeasure": ("name", "D"),
        "ProcessStep": ("name",),
    }
    for label in CONTENT_LABELS:
        lines.append(f"  {label}({', '.join(label_props[label])})")
    lines.append("Relations, written (HeadLabel)-[:type]->(TailLabel):")
    for rel_type in CONTENT_RELATIONS:
        head, tail = ENDPOINT_RULES[rel_type]
        lines.append(f"  ({head})-[:{rel_type}]->({tail})")
    lines.append(
        "S, O and D are 1..10 ratings for severity, occurrence and detection; "
        "RPN is their product."
    )
    return "\n".join(lines)


def format_value(value) -> str:
    """Render one result cell for tables and retrieval contexts."""
    if value is None:
        return "null"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, np.ndarray):
        return "[" + ", ".join(repr(float(x)) for x in value) + "]"
    return str(value)


def render_rows(result: QueryResult) -> list[str]:
    """One text line per row: "column: value" pairs joined by commas."""
    lines = []
    for row in result.rows:
        parts = [f"{column}: {format_value(value)}" for column, value in zip(result.columns, row)]
        lines.append(", ".join(parts))
    return lines
