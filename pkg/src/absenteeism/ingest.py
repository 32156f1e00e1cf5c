"""Dataset ingest: strict CSV parsing, class binning, hire-time projection.

The source file is the absenteeism records export: 21 semicolon-separated
columns, one header row, integer fields except the daily work load. Parsing
is deliberately strict. Any malformed row is an error that names the row and
column instead of being silently dropped, so no imputation ever happens
downstream.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, TextIO


class DatasetError(ValueError):
    """Malformed or out-of-contract dataset content."""


class AbsenteeismClass(enum.IntEnum):
    """Absence burden categories, totally ordered from least to most severe."""

    A_PLUS = 0
    B_PLUS = 1
    C_PLUS = 2

    @property
    def label(self) -> str:
        return {0: "A+", 1: "B+", 2: "C+"}[self.value]

    @classmethod
    def from_label(cls, label: str) -> "AbsenteeismClass":
        for member in cls:
            if member.label == label:
                return member
        raise ValueError(f"unknown class label {label!r}")


# Canonical header, byte-exact (note the trailing space in the work load name).
HEADER = (
    "ID",
    "Reason for absence",
    "Month of absence",
    "Day of the week",
    "Seasons",
    "Transportation expense",
    "Distance from Residence to Work",
    "Service time",
    "Age",
    "Work load Average/day ",
    "Hit target",
    "Disciplinary failure",
    "Education",
    "Son",
    "Social drinker",
    "Social smoker",
    "Pet",
    "Weight",
    "Height",
    "Body mass index",
    "Absenteeism time in hours",
)


@dataclass(frozen=True)
class RawRecord:
    """One parsed dataset row, all 21 columns."""

    employee_id: int
    reason_for_absence: int
    month_of_absence: int
    day_of_week: int
    seasons: int
    transportation_expense: int
    distance_to_work: int
    service_time: int
    age: int
    work_load_avg_per_day: float
    hit_target: int
    disciplinary_failure: int
    education: int
    son: int
    social_drinker: int
    social_smoker: int
    pet: int
    weight: int
    height: int
    body_mass_index: int
    absenteeism_hours: int


@dataclass(frozen=True)
class HireTimeRecord:
    """The 13 attributes available at hire time plus the binned class."""

    reason_for_absence: int
    transportation_expense: int
    distance_to_work: int
    age: int
    work_load_avg_per_day: float
    education: int
    son: int
    social_drinker: int
    social_smoker: int
    pet: int
    weight: int
    height: int
    body_mass_index: int
    label: AbsenteeismClass


# (column header, record field, parser, validator, validator description)
_COLUMNS = [
    ("ID", "employee_id", int, lambda v: v >= 1, ">= 1"),
    ("Reason for absence", "reason_for_absence", int, lambda v: 0 <= v <= 28, "in [0, 28]"),
    ("Month of absence", "month_of_absence", int, lambda v: 0 <= v <= 12, "in [0, 12]"),
    ("Day of the week", "day_of_week", int, lambda v: 2 <= v <= 6, "in [2, 6]"),
    ("Seasons", "seasons", int, lambda v: 1 <= v <= 4, "in [1, 4]"),
    ("Transportation expense", "transportation_expense", int, lambda v: v >= 0, ">= 0"),
    ("Distance from Residence to Work", "distance_to_work", int, lambda v: v >= 0, ">= 0"),
    ("Service time", "service_time", int, lambda v: v >= 0, ">= 0"),
    ("Age", "age", int, lambda v: v > 0, "> 0"),
    ("Work load Average/day ", "work_load_avg_per_day", float, lambda v: v > 0, "> 0"),
    ("Hit target", "hit_target", int, lambda v: 0 <= v <= 100, "in [0, 100]"),
    ("Disciplinary failure", "disciplinary_failure", int, lambda v: v in (0, 1), "0 or 1"),
    ("Education", "education", int, lambda v: 1 <= v <= 4, "in [1, 4]"),
    ("Son", "son", int, lambda v: v >= 0, ">= 0"),
    ("Social drinker", "social_drinker", int, lambda v: v in (0, 1), "0 or 1"),
    ("Social smoker", "social_smoker", int, lambda v: v in (0, 1), "0 or 1"),
    ("Pet", "pet", int, lambda v: v >= 0, ">= 0"),
    ("Weight", "weight", int, lambda v: v > 0, "> 0"),
    ("Height", "height", int, lambda v: v > 0, "> 0"),
    ("Body mass index", "body_mass_index", int, lambda v: v > 0, "> 0"),
    ("Absenteeism time in hours", "absenteeism_hours", int, lambda v: 0 <= v <= 120, "in [0, 120]"),
]


def bin_absenteeism(hours: float) -> AbsenteeismClass:
    """Map absence hours to the three-way class.

    0 hours is A+, 1 to 15 hours is B+, 16 to 120 hours is C+. Values
    outside [0, 120] are rejected rather than clamped.
    """
    if not 0 <= hours <= 120:
        raise DatasetError(f"absenteeism hours {hours!r} outside [0, 120]")
    if hours == 0:
        return AbsenteeismClass.A_PLUS
    if hours <= 15:
        return AbsenteeismClass.B_PLUS
    return AbsenteeismClass.C_PLUS


def _open_source(source) -> TextIO:
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline="")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    return source


def parse_dataset(source, delimiter: str = ";", expect_header: bool = True) -> list[RawRecord]:
    """Parse a dataset export into RawRecord rows.

    Parameters
    ----------
    source : path, bytes or text file object
    delimiter : field separator, semicolon in the canonical export
    expect_header : when True the first row must match HEADER exactly

    Raises DatasetError on any structural defect: wrong column count, a
    field that does not parse as its declared numeric type, an out-of-range
    value, a bad header, or an empty file. Error messages carry the
    1-based row number and the column name.
    """
    stream = _open_source(source)
    close = isinstance(source, (str, Path, bytes))
    try:
        reader = csv.reader(stream, delimiter=delimiter)
        rows = list(reader)
    finally:
        if close:
            stream.close()

    start = 0
    if expect_header:
        if not rows:
            raise DatasetError("empty input: no header row")
        header = [h.strip("﻿") for h in rows[0]]
        if tuple(header) != HEADER:
            for got, want in zip(header, HEADER):
                if got != want:
                    raise DatasetError(f"header mismatch: expected {want!r}, found {got!r}")
            raise DatasetError(
                f"header has {len(header)} columns, expected {len(HEADER)}"
            )
        start = 1

    records = []
    for idx, row in enumerate(rows[start:], start=start + 1):
        if not row or (len(row) == 1 and row[0].strip() == ""):
            continue  # a trailing blank line is not data
        if len(row) != len(_COLUMNS):
            raise DatasetError(f"row {idx} has {len(row)} fields, expected {len(_COLUMNS)}")
        values = {}
        for (name, field, parser, check, desc), cell in zip(_COLUMNS, row):
            text = cell.strip()
            if text == "":
                raise DatasetError(f"row {idx}, column {name!r}: missing value")
            try:
                value = parser(text)
            except ValueError:
                kind = "integer" if parser is int else "number"
                raise DatasetError(
                    f"row {idx}, column {name!r}: cannot parse {text!r} as {kind}"
                ) from None
            if not check(value):
                raise DatasetError(
                    f"row {idx}, column {name!r}: value {value!r} not {desc}"
                )
            values[field] = value
        records.append(RawRecord(**values))

    if not records:
        raise DatasetError("empty input: no data rows")
    return records


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(int(value)) if value == int(value) else repr(value)
    return str(value)


def write_dataset(records: Iterable[RawRecord], sink: TextIO, delimiter: str = ";") -> None:
    """Serialize records back to the export layout, header included."""
    writer = csv.writer(sink, delimiter=delimiter, lineterminator="\n")
    writer.writerow(HEADER)
    field_names = [f for _, f, _, _, _ in _COLUMNS]
    for rec in records:
        writer.writerow([_format_cell(getattr(rec, f)) for f in field_names])


def to_hire_time(records: Iterable[RawRecord]) -> list[HireTimeRecord]:
    """Project raw rows onto hire-time attributes and the binned class.

    Administrative columns (id, month, weekday, season, service time, hit
    target, disciplinary failure) are dropped; the hour count becomes the
    class label and is no longer visible to models.
    """
    out = []
    predictor_fields = [f.name for f in fields(HireTimeRecord) if f.name != "label"]
    for rec in records:
        out.append(
            HireTimeRecord(
                **{f: getattr(rec, f) for f in predictor_fields},
                label=bin_absenteeism(rec.absenteeism_hours),
            )
        )
    return out


def class_histogram(records: Iterable[HireTimeRecord]) -> dict[AbsenteeismClass, int]:
    """Count rows per class, every class present in the result."""
    counts = {c: 0 for c in AbsenteeismClass}
    for rec in records:
        counts[rec.label] += 1
    return counts
