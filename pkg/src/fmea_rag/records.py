"""Tabular failure-analysis records.

An FMEA table is a flat list of rows. Each row names a process step, a
failure mode observed at that step, one effect, one cause, one
countermeasure, and the three ratings severity (S), occurrence (O) and
detection (D). The risk priority number is the product of the three
ratings.

Parsing is strict: the nine-column header must match exactly, ratings
must be integers inside the configured range, and a non-empty rpn cell
must agree with S*O*D.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, replace
from typing import IO, Iterable

from .errors import ConsistencyError, CsvParseError, ValidationError

CSV_HEADER = (
    "process_step",
    "failure_mode",
    "failure_effect",
    "severity",
    "failure_cause",
    "occurrence",
    "failure_measure",
    "detection",
    "rpn",
)

ABBREV_HEADER = ("short", "long")

# Rating scale ceiling. Ten-point scales are the common practice; parse
# options may lower the ceiling but never raise it past 10.
RATING_MAX = 10

_WS_RUN = re.compile(r"\s+")

TEXT_FIELDS = (
    "process_step",
    "failure_mode",
    "failure_effect",
    "failure_cause",
    "failure_measure",
)


def canonical_text(text: str) -> str:
    """Trim and collapse internal whitespace runs to single spaces.

    Every equality comparison between row texts (node deduplication in
    particular) goes through this form.
    """
    return _WS_RUN.sub(" ", text.strip())


def validate_rating(value: int, name: str = "rating", rating_max: int = RATING_MAX) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    if not 1 <= value <= rating_max:
        raise ValidationError(f"{name} must be in [1, {rating_max}], got {value}")
    return value


def compute_rpn(severity: int, occurrence: int, detection: int, rating_max: int = RATING_MAX) -> int:
    """Risk priority number: the product of the three ratings."""
    validate_rating(severity, "severity", rating_max)
    validate_rating(occurrence, "occurrence", rating_max)
    validate_rating(detection, "detection", rating_max)
    return severity * occurrence * detection


@dataclass(frozen=True)
class FailureRecord:
    """One FMEA row. Text fields are stored trimmed and non-empty."""

    process_step: str
    failure_mode: str
    failure_effect: str
    severity: int
    failure_cause: str
    occurrence: int
    failure_measure: str
    detection: int
    rpn: int

    def __post_init__(self) -> None:
        for field_name in TEXT_FIELDS:
            raw = getattr(self, field_name)
            if not isinstance(raw, str):
                raise ValidationError(f"{field_name} must be a string")
            trimmed = raw.strip()
            if not trimmed:
                raise ValidationError(f"{field_name} must not be empty")
            if trimmed != raw:
                object.__setattr__(self, field_name, trimmed)
        validate_rating(self.severity, "severity")
        validate_rating(self.occurrence, "occurrence")
        validate_rating(self.detection, "detection")
        expected = self.severity * self.occurrence * self.detection
        if self.rpn != expected:
            raise ConsistencyError(
                f"rpn {self.rpn} contradicts severity*occurrence*detection = {expected}"
            )


@dataclass(frozen=True)
class FmeaTable:
    """A parsed table plus the optional abbreviation map that came with it."""

    records: tuple[FailureRecord, ...]
    abbreviation_map: dict[str, str] | None = None

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class ParseOptions:
    rating_max: int = RATING_MAX

    def __post_init__(self) -> None:
        if not 1 <= self.rating_max <= RATING_MAX:
            raise ValidationError(f"rating_max must be in [1, {RATING_MAX}]")


def _reader(source: str | IO[str]) -> Iterable[list[str]]:
    if isinstance(source, str):
        source = io.StringIO(source)
    return csv.reader(source)


def _parse_rating(cell: str, name: str, row: int, rating_max: int) -> int:
    cell = cell.strip()
    try:
        value = int(cell)
    except ValueError:
        raise CsvParseError(f"{name} must be an integer, got {cell!r}", row) from None
    if not 1 <= value <= rating_max:
        raise ValidationError(f"row {row}: {name} must be in [1, {rating_max}], got {value}")
    return value


def parse_fmea_table(
    source: str | IO[str],
    options: ParseOptions | None = None,
    abbreviation_map: dict[str, str] | None = None,
) -> FmeaTable:
    """Parse CSV text or a text stream into an FmeaTable.

    Row numbers in error messages are 1-based over the data rows, the
    header row is row 0. An empty rpn cell is computed from the ratings;
    a non-empty one is cross-checked against them.
    """
    options = options or ParseOptions()
    rows = _reader(source)
    try:
        header = next(iter(rows))
    except StopIteration:
        raise CsvParseError("missing header row", 0) from None
    if tuple(cell.strip() for cell in header) != CSV_HEADER:
        raise CsvParseError(
            f"header must be exactly {','.join(CSV_HEADER)}, got {','.join(header)}", 0
        )

    records: list[FailureRecord] = []
    for index, row in enumerate(rows, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(CSV_HEADER):
            raise CsvParseError(f"expected {len(CSV_HEADER)} columns, got {len(row)}", index)
        step, mode, effect, s_cell, cause, o_cell, measure, d_cell, rpn_cell = row
        for name, cell in (
            ("process_step", step),
            ("failure_mode", mode),
            ("failure_effect", effect),
            ("failure_cause", cause),
            ("failure_measure", measure),
        ):
            if not cell.strip():
                raise ValidationError(f"row {index}: {name} must not be empty")
        severity = _parse_rating(s_cell, "severity", index, options.rating_max)
        occurrence = _parse_rating(o_cell, "occurrence", index, options.rating_max)
        detection = _parse_rating(d_cell, "detection", index, options.rating_max)
        expected = severity * occurrence * detection
        rpn_cell = rpn_cell.strip()
        if rpn_cell:
            try:
                stated = int(rpn_cell)
            except ValueError:
                raise CsvParseError(f"rpn must be an integer or empty, got {rpn_cell!r}", index) from None
            if stated != expected:
                raise ConsistencyError(
                    f"row {index}: rpn {stated} contradicts "
                    f"severity*occurrence*detection = {expected}"
                )
        records.append(
            FailureRecord(
                process_step=step,
                failure_mode=mode,
                failure_effect=effect,
                severity=severity,
                failure_cause=cause,
                occurrence=occurrence,
                failure_measure=measure,
                detection=detection,
                rpn=expected,
            )
        )
    return FmeaTable(records=tuple(records), abbreviation_map=abbreviation_map)


def serialize_fmea_table(table: FmeaTable) -> str:
    """Write the table back to CSV with the canonical nine-column header."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in table.records:
        writer.writerow(
            [
                rec.process_step,
                rec.failure_mode,
                rec.failure_effect,
                rec.severity,
                rec.failure_cause,
                rec.occurrence,
                rec.failure_measure,
                rec.detection,
                rec.rpn,
            ]
        )
    return out.getvalue()


def parse_abbreviation_map(source: str | IO[str]) -> dict[str, str]:
    """Parse a two-column short,long CSV into an ordered mapping."""
    rows = _reader(source)
    try:
        header = next(iter(rows))
    except StopIteration:
        raise CsvParseError("missing header row", 0) from None
    if tuple(cell.strip() for cell in header) != ABBREV_HEADER:
        raise CsvParseError("header must be exactly short,long", 0)
    mapping: dict[str, str] = {}
    for index, row in enumerate(rows, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise CsvParseError(f"expected 2 columns, got {len(row)}", index)
        short, long = row[0].strip(), row[1].strip()
        if not short or not long:
            raise ValidationError(f"row {index}: short and long must not be empty")
        if short in mapping and mapping[short] != long:
            raise ConsistencyError(f"row {index}: short form {short!r} mapped twice")
        mapping[short] = long
    return mapping


def _whole_word_pattern(short: str) -> re.Pattern[str]:
    # A match must not touch an adjacent alphanumeric, so "AB" never
    # fires inside "ABC".
    return re.compile(rf"(?<![0-9A-Za-z]){re.escape(short)}(?![0-9A-Za-z])")


def expand_abbreviations(table: FmeaTable) -> FmeaTable:
    """Replace whole-word short forms with their long forms in all text fields.

    Replacement is case-sensitive and applies longest short form first.
    A table without a map is returned unchanged.
    """
    if not table.abbreviation_map:
        return table
    ordered = sorted(table.abbreviation_map.items(), key=lambda kv: (-len(kv[0]), kv[0]))
    patterns = [(_whole_word_pattern(short), long) for short, long in ordered]

    def expand(text: str) -> str:
        for pattern, long in patterns:
            text = pattern.sub(lambda _m: long, text)
        return text

    expanded = tuple(
        replace(
            rec,
            process_step=expand(rec.process_step),
            failure_mode=expand(rec.failure_mode),
            failure_effect=expand(rec.failure_effect),
            failure_cause=expand(rec.failure_cause),
            failure_measure=expand(rec.failure_measure),
        )
        for rec in table.records
    )
    return FmeaTable(records=expanded, abbreviation_map=table.abbreviation_map)
