import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fmea_rag.errors import ConsistencyError, CsvParseError, ValidationError
from fmea_rag.records import (
    FailureRecord,
    FmeaTable,
    ParseOptions,
    canonical_text,
    compute_rpn,
    expand_abbreviations,
    parse_abbreviation_map,
    parse_fmea_table,
    serialize_fmea_table,
    validate_rating,
)

HEADER = "process_step,failure_mode,failure_effect,severity,failure_cause,occurrence,failure_measure,detection,rpn"


def row(step="Stacking", mode="Bad cell", effect="Leak", s=7, cause="Dust", o=3, measure="Filter", d=5, rpn=""):
    return f"{step},{mode},{effect},{s},{cause},{o},{measure},{d},{rpn}"


def make_csv(*rows):
    return "\n".join([HEADER, *rows]) + "\n"


class TestParsing:
    def test_battery_fixture_parses(self, battery_table):
        assert len(battery_table.records) == 3
        assert [rec.rpn for rec in battery_table.records] == [105, 192, 135]

    def test_empty_rpn_cell_is_computed(self):
        table = parse_fmea_table(make_csv(row(s=2, o=3, d=4, rpn="")))
        assert table.records[0].rpn == 24

    def test_rpn_cross_check_failure_names_row(self):
        with pytest.raises(ConsistencyError, match="row 2"):
            parse_fmea_table(make_csv(row(), row(s=2, o=3, d=4, rpn="25")))

    def test_wrong_header_rejected(self):
        with pytest.raises(CsvParseError, match="row 0"):
            parse_fmea_table("a,b,c\n1,2,3\n")

    def test_missing_header_rejected(self):
        with pytest.raises(CsvParseError):
            parse_fmea_table("")

    def test_blank_rows_are_skipped(self):
        table = parse_fmea_table(make_csv(row(), "", ",,,,,,,,", row(mode="Other")))
        assert len(table.records) == 2

    def test_rating_out_of_range_names_row(self):
        with pytest.raises(ValidationError, match="row 1"):
            parse_fmea_table(make_csv(row(s=11)))

    def test_rating_zero_rejected(self):
        with pytest.raises(ValidationError):
            parse_fmea_table(make_csv(row(o=0)))

    def test_non_integer_rating_rejected(self):
        with pytest.raises(CsvParseError, match="row 1"):
            parse_fmea_table(make_csv(row(d="high")))

    def test_empty_text_field_rejected(self):
        with pytest.raises(ValidationError):
            parse_fmea_table(make_csv(row(cause="  ")))

    def test_column_count_mismatch_names_row(self):
        with pytest.raises(CsvParseError, match="row 1"):
            parse_fmea_table(HEADER + "\nonly,three,cells\n")

    def test_custom_rating_ceiling(self):
        options = ParseOptions(rating_max=5)
        with pytest.raises(ValidationError):
            parse_fmea_table(make_csv(row(s=7)), options)
        table = parse_fmea_table(make_csv(row(s=5, o=5, d=5)), options)
        assert table.records[0].rpn == 125

    def test_fields_are_stripped_but_inner_spacing_kept(self):
        # Full whitespace collapse happens at graph node canonicalization.
        table = parse_fmea_table(make_csv(row(mode="  Bad   cell ")))
        assert table.records[0].failure_mode == "Bad   cell"
        assert canonical_text(table.records[0].failure_mode) == "Bad cell"

    def test_quoted_commas_survive(self):
        csv_text = make_csv('Welding,"Weak, brittle seam",Leak,7,Dust,3,Filter,5,105')
        assert parse_fmea_table(csv_text).records[0].failure_mode == "Weak, brittle seam"


class TestRpn:
    def test_table_values(self, battery_table):
        for rec in battery_table.records:
            assert compute_rpn(rec.severity, rec.occurrence, rec.detection) == rec.rpn

    @given(st.integers(1, 10), st.integers(1, 10), st.integers(1, 10))
    def test_product_rule(self, s, o, d):
        assert compute_rpn(s, o, d) == s * o * d

    @pytest.mark.parametrize("bad", [0, -1, 11])
    def test_range_enforced(self, bad):
        with pytest.raises(ValidationError):
            compute_rpn(bad, 1, 1)
        with pytest.raises(ValidationError):
            validate_rating(bad)

    def test_record_rejects_inconsistent_rpn(self):
        with pytest.raises(ConsistencyError):
            FailureRecord(
                process_step="a", failure_mode="b", failure_effect="c", severity=2,
                failure_cause="d", occurrence=3, failure_measure="e", detection=4, rpn=25,
            )


class TestSerialization:
    def test_round_trip_battery(self, battery_table):
        assert parse_fmea_table(serialize_fmea_table(battery_table)) == battery_table

    @settings(max_examples=30, deadline=None)
    @given(st.data())
    def test_round_trip_random(self, data):
        texts = st.text(
            alphabet=st.characters(blacklist_categories=("Cs", "Cc")),
            min_size=1,
        ).map(str.strip).filter(lambda s: s)

        def record(step, mode, effect, cause, measure, s, o, d):
            return FailureRecord(
                process_step=step, failure_mode=mode, failure_effect=effect,
                severity=s, failure_cause=cause, occurrence=o,
                failure_measure=measure, detection=d, rpn=s * o * d,
            )

        records = data.draw(
            st.lists(
                st.builds(
                    record,
                    step=texts, mode=texts, effect=texts, cause=texts, measure=texts,
                    s=st.integers(1, 10), o=st.integers(1, 10), d=st.integers(1, 10),
                ),
                min_size=1, max_size=6,
            )
        )
        table = FmeaTable(records=tuple(records))
        assert parse_fmea_table(serialize_fmea_table(table)) == table


class TestAbbreviations:
    def test_map_parsing(self):
        mapping = parse_abbreviation_map("short,long\nKG,knowledge graph\nRPN,risk priority number\n")
        assert mapping == {"KG": "knowledge graph", "RPN": "risk priority number"}

    def test_map_conflict_rejected(self):
        with pytest.raises(ConsistencyError):
            parse_abbreviation_map("short,long\nKG,knowledge graph\nKG,kilogram\n")

    def test_map_header_enforced(self):
        with pytest.raises(CsvParseError):
            parse_abbreviation_map("from,to\nKG,knowledge graph\n")

    def test_whole_word_only(self):
        table = parse_fmea_table(
            make_csv(row(mode="KG drift", cause="BKGD noise")),
            abbreviation_map={"KG": "knowledge graph"},
        )
        expanded = expand_abbreviations(table)
        assert expanded.records[0].failure_mode == "knowledge graph drift"
        assert expanded.records[0].failure_cause == "BKGD noise"

    def test_longest_short_form_wins(self):
        table = parse_fmea_table(
            make_csv(row(mode="EOL check")),
            abbreviation_map={"EOL": "end of line", "EO": "electro optical"},
        )
        assert expand_abbreviations(table).records[0].failure_mode == "end of line check"

    def test_expansion_is_case_sensitive(self):
        table = parse_fmea_table(
            make_csv(row(mode="kg drift")),
            abbreviation_map={"KG": "knowledge graph"},
        )
        assert expand_abbreviations(table).records[0].failure_mode == "kg drift"

    def test_no_map_is_identity(self, battery_table):
        assert expand_abbreviations(battery_table) is battery_table

    def test_replacement_text_is_literal(self):
        # Long forms containing regex metacharacters must not explode.
        table = parse_fmea_table(
            make_csv(row(mode="S1 fault")),
            abbreviation_map={"S1": r"stage \1 (primary)"},
        )
        assert expand_abbreviations(table).records[0].failure_mode == r"stage \1 (primary) fault"
