"""Query language: lexer, parser, formatter, and evaluation semantics."""

import random

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from fmea_rag.errors import (
    MixedAggregateError,
    QueryBindingError,
    QueryExecutionError,
    QuerySyntaxError,
)
from fmea_rag.graph import (
    ALL_RELATIONS,
    CONTENT_LABELS,
    KnowledgeGraph,
)
from fmea_rag.query import (
    Condition,
    EdgePattern,
    NodePattern,
    OrderBy,
    PropertyRef,
    Query,
    ReturnItem,
    execute,
    format_query,
    format_value,
    parse_query,
    render_rows,
    run_query,
    schema_text,
)

from oracles import random_query_text, random_table, reference_execute


def small_graph() -> KnowledgeGraph:
    """Two modes sharing one cause; distinct effects, steps and measures."""
    g = KnowledgeGraph()
    m1 = g.add_node("FailureMode", "Seal rupture")
    m2 = g.add_node("FailureMode", "Seal abrasion")
    c = g.add_node("FailureCause", "Worn die", literals={"O": 4, "RPN": 96})
    e1 = g.add_node("FailureEffect", "Leak", literals={"S": 8})
    e2 = g.add_node("FailureEffect", "Noise", literals={"S": 3})
    s = g.add_node("ProcessStep", "Sealing")
    x = g.add_node("FailureMeasure", "Die gauge check", literals={"D": 3})
    g.add_triple(m1, "isDueToFailureCause", c)
    g.add_triple(m2, "isDueToFailureCause", c)
    g.add_triple(m1, "resultsInFailureEffect", e1)
    g.add_triple(m2, "resultsInFailureEffect", e2)
    g.add_triple(m1, "occursAtProcessStep", s)
    g.add_triple(m2, "occursAtProcessStep", s)
    g.add_triple(c, "isImprovedByFailureMeasure", x)
    return g


class TestLexerAndSyntax:
    def test_keywords_are_case_insensitive(self, battery_graph):
        upper = run_query("MATCH (m:FailureMode) RETURN m.name", battery_graph)
        lower = run_query("match (m:FailureMode) return m.name", battery_graph)
        assert upper == lower

    def test_identifiers_are_case_sensitive(self, battery_graph):
        with pytest.raises(QueryBindingError):
            parse_query("MATCH (m:FailureMode) RETURN M.name")

    def test_string_escapes(self):
        q = parse_query('MATCH (a {name: "say \\"hi\\" \\\\ done"}) RETURN a')
        assert q.nodes[0].symbol == 'say "hi" \\ done'

    def test_backslash_before_ordinary_char_is_literal(self):
        q = parse_query('MATCH (a {name: "a\\tb"}) RETURN a')
        assert q.nodes[0].symbol == "atb"

    def test_unterminated_string(self):
        with pytest.raises(QuerySyntaxError):
            parse_query('MATCH (a {name: "open) RETURN a')

    def test_string_cannot_span_lines(self):
        with pytest.raises(QuerySyntaxError):
            parse_query('MATCH (a {name: "first\nsecond"}) RETURN a')

    def test_unexpected_character_reports_position(self):
        with pytest.raises(QuerySyntaxError) as info:
            parse_query("MATCH (a) RETURN a %")
        assert info.value.line == 1
        assert info.value.column == 20
        assert "line 1, column 20" in str(info.value)

    def test_error_position_on_second_line(self):
        with pytest.raises(QuerySyntaxError) as info:
            parse_query("MATCH (a)\nRETURN a.")
        assert info.value.line == 2

    def test_keyword_cannot_name_a_variable(self):
        with pytest.raises(QuerySyntaxError):
            parse_query("MATCH (where) RETURN where")

    def test_aggregate_names_are_plain_identifiers(self):
        q = parse_query("MATCH (count) RETURN count ORDER BY count.name")
        assert q.nodes[0].var == "count"
        assert q.returns[0].aggregate is None

    def test_limit_rejects_float(self):
        with pytest.raises(QuerySyntaxError):
            parse_query("MATCH (a) RETURN a LIMIT 2.5")

    def test_limit_rejects_negative(self):
        with pytest.raises(QuerySyntaxError):
            parse_query("MATCH (a) RETURN a LIMIT -1")

    def test_number_with_trailing_dot(self):
        with pytest.raises(QuerySyntaxError):
            parse_query("MATCH (a) WHERE a.S > 1. RETURN a")

    def test_node_filter_key_must_be_name(self):
        with pytest.raises(QuerySyntaxError):
            parse_query('MATCH (a {label: "x"}) RETURN a')

    def test_node_filter_value_must_be_string(self):
        with pytest.raises(QuerySyntaxError):
            parse_query("MATCH (a {name: 3}) RETURN a")

    def test_edge_variables_are_not_supported(self):
        with pytest.raises(QuerySyntaxError):
            parse_query("MATCH (a)-[r:isDueToFailureCause]->(b) RETURN a")

    def test_trailing_input(self):
        with pytest.raises(QuerySyntaxError):
            parse_query("MATCH (a) RETURN a LIMIT 2 extra")

    def test_empty_text(self):
        with pytest.raises(QuerySyntaxError):
            parse_query("")


class TestParsing:
    def test_full_query_ast(self):
        got = parse_query(
            'MATCH (m:FailureMode {name: "Seal rupture"})-[:isDueToFailureCause]->(c)'
            '<-[:isDueToFailureCause]-(n) '
            'WHERE c.O >= 2 AND n.name <> "Seal rupture" '
            "RETURN n.name, c.RPN ORDER BY c.RPN DESC LIMIT 5"
        )
        assert got == Query(
            nodes=(
                NodePattern("m", "FailureMode", "Seal rupture"),
                NodePattern("c"),
                NodePattern("n"),
            ),
            edges=(
                EdgePattern("isDueToFailureCause", outgoing=True),
                EdgePattern("isDueToFailureCause", outgoing=False),
            ),
            where=(
                Condition(PropertyRef("c", "O"), ">=", 2),
                Condition(PropertyRef("n", "name"), "<>", "Seal rupture"),
            ),
            returns=(
                ReturnItem(PropertyRef("n", "name")),
                ReturnItem(PropertyRef("c", "RPN")),
            ),
            order_by=OrderBy(ReturnItem(PropertyRef("c", "RPN")), descending=True),
            limit=5,
        )

    def test_minimal_query_ast(self):
        assert parse_query("MATCH (a) RETURN a") == Query(
            nodes=(NodePattern("a"),),
            edges=(),
            returns=(ReturnItem(PropertyRef("a")),),
        )

    def test_negative_number_operand(self):
        q = parse_query("MATCH (a) WHERE a.S > -2.5 RETURN a")
        assert q.where[0].rhs == -2.5

    def test_order_by_defaults_to_ascending(self):
        q = parse_query("MATCH (a) RETURN a.name ORDER BY a.name")
        assert q.order_by == OrderBy(ReturnItem(PropertyRef("a", "name")), descending=False)
        explicit = parse_query("MATCH (a) RETURN a.name ORDER BY a.name ASC")
        assert explicit.order_by == q.order_by

    @pytest.mark.parametrize("agg", ["count", "sum", "avg", "min", "max"])
    def test_aggregates_parse(self, agg):
        q = parse_query(f"MATCH (a) RETURN {agg}(a.S)")
        assert q.returns[0] == ReturnItem(PropertyRef("a", "S"), agg)
        assert q.is_aggregate

    def test_count_of_bare_variable(self):
        q = parse_query("MATCH (a) RETURN count(a)")
        assert q.returns[0] == ReturnItem(PropertyRef("a"), "count")

    def test_mixed_aggregate_and_plain_return_rejected(self):
        with pytest.raises(MixedAggregateError):
            parse_query("MATCH (a) RETURN a.name, count(a)")

    @pytest.mark.parametrize(
        "text",
        [
            "MATCH (a) WHERE b.S = 1 RETURN a",
            "MATCH (a) RETURN b",
            "MATCH (a) RETURN a ORDER BY b.name",
        ],
    )
    def test_unbound_variables_rejected(self, text):
        with pytest.raises(QueryBindingError):
            parse_query(text)


# AST generation for the round-trip property. Keyword collisions are the
# only reserved names; floats are kept in the range where repr() stays in
# plain decimal notation so the formatter's output re-tokenizes.
KEYWORD_LOWER = {"match", "where", "and", "return", "order", "by", "asc", "desc", "limit"}

idents = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,8}", fullmatch=True).filter(
    lambda s: s.lower() not in KEYWORD_LOWER
)
symbols = st.text(
    st.characters(blacklist_characters="\n\r", blacklist_categories=("Cs",)),
    max_size=12,
)
numbers = st.one_of(
    st.integers(min_value=-(10**9), max_value=10**9),
    st.floats(min_value=-1e9, max_value=1e9, allow_nan=False).filter(
        lambda x: x == 0 or abs(x) >= 1e-3
    ),
)
operands = st.one_of(
    st.builds(PropertyRef, idents, st.one_of(st.none(), idents)),
    numbers,
    symbols,
)
props = st.one_of(st.none(), idents)


@st.composite
def queries(draw) -> Query:
    node_count = draw(st.integers(min_value=1, max_value=4))
    nodes = tuple(
        NodePattern(
            draw(idents),
            draw(st.one_of(st.none(), st.sampled_from(sorted(CONTENT_LABELS)))),
            draw(st.one_of(st.none(), symbols)),
        )
        for _ in range(node_count)
    )
    edges = tuple(
        EdgePattern(draw(st.sampled_from(sorted(ALL_RELATIONS))), draw(st.booleans()))
        for _ in range(node_count - 1)
    )
    bound = sorted({n.var for n in nodes})
    bound_refs = st.builds(PropertyRef, st.sampled_from(bound), props)
    where = tuple(
        draw(st.lists(st.builds(Condition, st.one_of(bound_refs, operands.filter(lambda o: not isinstance(o, PropertyRef))), st.sampled_from(["=", "<>", "<", "<=", ">", ">="]), st.one_of(bound_refs, numbers, symbols)), max_size=3))
    )
    # drop conditions that reference unbound variables
    where = tuple(
        c
        for c in where
        if all(
            not isinstance(op, PropertyRef) or op.var in bound for op in (c.lhs, c.rhs)
        )
    )
    if draw(st.booleans()):
        returns = tuple(
            ReturnItem(draw(bound_refs), draw(st.sampled_from(["count", "sum", "avg", "min", "max"])))
            for _ in range(draw(st.integers(min_value=1, max_value=3)))
        )
    else:
        returns = tuple(
            ReturnItem(draw(bound_refs), None)
            for _ in range(draw(st.integers(min_value=1, max_value=3)))
        )
    order_by = None
    if draw(st.booleans()):
        order_by = OrderBy(ReturnItem(draw(bound_refs), None), draw(st.booleans()))
    limit = draw(st.one_of(st.none(), st.integers(min_value=0, max_value=50)))
    return Query(nodes, edges, where, returns, order_by, limit)


class TestFormatRoundTrip:
    @settings(max_examples=300, suppress_health_check=[HealthCheck.too_slow])
    @given(queries())
    def test_parse_inverts_format(self, query):
        assert parse_query(format_query(query)) == query

    @settings(max_examples=100, suppress_health_check=[HealthCheck.too_slow])
    @given(queries())
    def test_formatted_text_is_a_fixed_point(self, query):
        text = format_query(query)
        assert format_query(parse_query(text)) == text

    def test_format_spells_out_order_direction(self):
        q = parse_query("MATCH (a) RETURN a.name ORDER BY a.name")
        assert format_query(q).endswith("ORDER BY a.name ASC")


class TestSemantics:
    def test_bare_variable_projects_symbol(self):
        result = run_query('MATCH (m:FailureMode {name: "Seal rupture"}) RETURN m', small_graph())
        assert result.rows == (("Seal rupture",),)

    def test_name_is_a_pseudo_property(self):
        g = small_graph()
        by_name = run_query("MATCH (e:FailureEffect) RETURN e.name ORDER BY e.name", g)
        bare = run_query("MATCH (e:FailureEffect) RETURN e ORDER BY e", g)
        assert by_name.rows == bare.rows == (("Leak",), ("Noise",))

    def test_name_filter_matches_canonical_symbol_only(self):
        g = KnowledgeGraph()
        g.add_node("FailureMode", " Bad   cell ")
        hit = run_query('MATCH (m {name: "Bad cell"}) RETURN m', g)
        assert hit.rows == (("Bad cell",),)
        miss = run_query('MATCH (m {name: " Bad   cell "}) RETURN m', g)
        assert miss.rows == ()

    def test_missing_literal_reads_as_null(self):
        result = run_query(
            'MATCH (m:FailureMode {name: "Seal rupture"}) RETURN m.S', small_graph()
        )
        assert result.rows == ((None,),)

    @pytest.mark.parametrize("op", ["=", "<>", "<", "<=", ">", ">="])
    def test_null_comparisons_are_false(self, op):
        result = run_query(
            f"MATCH (m:FailureMode) WHERE m.S {op} 3 RETURN m.name", small_graph()
        )
        assert result.rows == ()

    @pytest.mark.parametrize("cond", ['e.S = "8"', 'e.S > "1"', '"8" = e.S'])
    def test_number_string_comparisons_are_false(self, cond):
        result = run_query(
            f"MATCH (e:FailureEffect) WHERE {cond} RETURN e.name", small_graph()
        )
        assert result.rows == ()

    def test_where_is_conjunctive(self):
        result = run_query(
            "MATCH (e:FailureEffect) WHERE e.S > 1 AND e.S < 5 RETURN e.name",
            small_graph(),
        )
        assert result.rows == (("Noise",),)

    def test_edge_direction(self):
        g = small_graph()
        out = run_query(
            'MATCH (m {name: "Seal rupture"})-[:isDueToFailureCause]->(c) RETURN c.name', g
        )
        incoming = run_query(
            'MATCH (c:FailureCause)<-[:isDueToFailureCause]-(m) RETURN m.name ORDER BY m.name', g
        )
        assert out.rows == (("Worn die",),)
        assert incoming.rows == (("Seal abrasion",), ("Seal rupture",))

    def test_repeated_variable_must_rebind_consistently(self):
        # (a)->(c)<-(a) keeps only round trips that land back on the same
        # mode, one per mode here, not the 2x2 cross product.
        result = run_query(
            "MATCH (a:FailureMode)-[:isDueToFailureCause]->(c)"
            "<-[:isDueToFailureCause]-(a) RETURN a.name ORDER BY a.name",
            small_graph(),
        )
        assert result.rows == (("Seal abrasion",), ("Seal rupture",))

    def test_rows_follow_insertion_order_without_order_by(self, battery_graph):
        result = run_query("MATCH (m:FailureMode) RETURN m.name", battery_graph)
        names = [row[0] for row in result.rows]
        assert names == [n.symbol for n in battery_graph.nodes_by_label("FailureMode")]

    def test_count_over_zero_matches_is_one_row_of_zero(self):
        result = run_query(
            'MATCH (m:FailureMode {name: "No such"}) RETURN count(m)', small_graph()
        )
        assert result.rows == ((0,),)

    def test_empty_aggregates(self):
        result = run_query(
            'MATCH (e:FailureEffect {name: "No such"}) '
            "RETURN count(e), sum(e.S), avg(e.S), min(e.S), max(e.S)",
            small_graph(),
        )
        assert result.rows == ((0, 0, None, None, None),)

    def test_count_of_property_skips_nulls(self):
        g = small_graph()
        # S exists on effects only; modes contribute null
        result = run_query("MATCH (n) RETURN count(n), count(n.S)", g)
        total, with_s = result.rows[0]
        assert total == 7
        assert with_s == 2

    def test_sum_and_avg(self):
        result = run_query("MATCH (e:FailureEffect) RETURN sum(e.S), avg(e.S)", small_graph())
        assert result.rows == ((11, 5.5),)

    def test_sum_of_strings_rejected(self):
        with pytest.raises(QueryExecutionError):
            run_query("MATCH (e:FailureEffect) RETURN sum(e.name)", small_graph())

    def test_avg_of_strings_rejected(self):
        with pytest.raises(QueryExecutionError):
            run_query("MATCH (e:FailureEffect) RETURN avg(e.name)", small_graph())

    def test_min_max_order_numbers_before_strings(self):
        # min/max use the global sort order, so values of mixed type pick
        # the number for min and the string for max.
        result = run_query("MATCH (n) RETURN min(n.S), max(n.name)", small_graph())
        assert result.rows == ((3, "Worn die"),)

    def test_order_by_descending_breaks_ties_ascending(self):
        g = KnowledgeGraph()
        for name, severity in [("b", 2), ("a", 2), ("c", 1), ("d", 2)]:
            g.add_node("FailureEffect", name, literals={"S": severity})
        result = run_query(
            "MATCH (e:FailureEffect) RETURN e.name ORDER BY e.S DESC", g
        )
        assert result.rows == (("a",), ("b",), ("d",), ("c",))

    def test_order_by_ascending_breaks_ties_ascending(self):
        g = KnowledgeGraph()
        for name, severity in [("b", 2), ("a", 2), ("c", 1), ("d", 2)]:
            g.add_node("FailureEffect", name, literals={"S": severity})
        result = run_query("MATCH (e:FailureEffect) RETURN e.name ORDER BY e.S", g)
        assert result.rows == (("c",), ("a",), ("b",), ("d",))

    def test_order_by_places_nulls_last_ascending(self):
        result = run_query("MATCH (n) RETURN n.S ORDER BY n.S", small_graph())
        values = [row[0] for row in result.rows]
        assert values[:2] == [3, 8]
        assert all(v is None for v in values[2:])

    def test_limit_zero_and_overrun(self):
        g = small_graph()
        assert run_query("MATCH (m:FailureMode) RETURN m LIMIT 0", g).rows == ()
        assert len(run_query("MATCH (m:FailureMode) RETURN m LIMIT 99", g).rows) == 2

    def test_limit_zero_empties_even_aggregates(self):
        result = run_query("MATCH (m:FailureMode) RETURN count(m) LIMIT 0", small_graph())
        assert result.rows == ()

    def test_order_by_aggregate_rejected_in_plain_query(self):
        with pytest.raises(QueryExecutionError):
            run_query(
                "MATCH (m:FailureMode) RETURN m.name ORDER BY count(m)", small_graph()
            )

    def test_order_by_is_inert_in_aggregate_query(self):
        result = run_query(
            "MATCH (m:FailureMode) RETURN count(m) ORDER BY m.name", small_graph()
        )
        assert result.rows == ((2,),)

    def test_unknown_label_rejected_at_execution(self):
        query = parse_query("MATCH (x:Widget) RETURN x")
        with pytest.raises(QueryExecutionError):
            execute(query, small_graph())

    def test_unknown_relation_rejected_at_execution(self):
        query = parse_query("MATCH (a)-[:causes]->(b) RETURN a")
        with pytest.raises(QueryExecutionError):
            execute(query, small_graph())

    def test_column_headers_echo_return_items(self):
        result = run_query(
            "MATCH (e:FailureEffect) RETURN count(e), count(e.S)", small_graph()
        )
        assert result.columns == ("count(e)", "count(e.S)")
        plain = run_query("MATCH (e:FailureEffect) RETURN e, e.S", small_graph())
        assert plain.columns == ("e", "e.S")


class TestAgainstReferenceEvaluator:
    def test_random_queries_match_reference(self, embedder):
        from fmea_rag.graph import transpose

        rng = random.Random(20260819)
        checked = 0
        for round_no in range(60):
            table = random_table(rng)
            graph = transpose(table)
            payload = graph.to_payload()
            for _ in range(5):
                text = random_query_text(rng, payload)
                query = parse_query(text)
                try:
                    got = execute(query, graph)
                except QueryExecutionError:
                    with pytest.raises(QueryExecutionError):
                        reference_execute(payload, query)
                    continue
                columns, rows = reference_execute(payload, query)
                assert got.columns == columns, text
                assert got.rows == rows, text
                checked += 1
        assert checked >= 250


class TestSchemaAndRendering:
    def test_schema_description_is_frozen(self, golden_dir):
        expected = (golden_dir / "schema_text.txt").read_text()
        assert schema_text() + "\n" == expected

    def test_schema_names_every_content_label_and_relation(self):
        text = schema_text()
        for label in CONTENT_LABELS:
            assert label in text
        for rel in sorted(set(ALL_RELATIONS) - {"hasVectorEmbedding"}):
            assert rel in text
        assert "hasVectorEmbedding" not in text

    def test_format_value(self):
        import numpy as np

        assert format_value(None) == "null"
        assert format_value(3) == "3"
        assert format_value(2.5) == "2.5"
        assert format_value("x") == "x"
        assert format_value(np.array([1.0, 0.5])) == "[1.0, 0.5]"

    def test_render_rows(self):
        result = run_query(
            "MATCH (e:FailureEffect) RETURN e.name, e.S ORDER BY e.S DESC", small_graph()
        )
        assert render_rows(result) == ["e.name: Leak, e.S: 8", "e.name: Noise, e.S: 3"]
