"""Loaders for the external real-world indicator CSVs.

Two layouts are understood: weekly initial unemployment claims
(`week_ending,initial_claims`) and monthly new Medicaid applications
(`month,new_applications`). Rows may arrive in any order; output is sorted.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date
from enum import Enum
from pathlib import Path

from ..errors import NegativeValue, NonMonotonicDates, SchemaMismatch
from ..series import Granularity, IndicatorPoint, IndicatorSeries


@dataclass(frozen=True)
class _Schema:
    date_column: str
    value_column: str
    series_name: str
    granularity: Granularity


class IndicatorSchema(Enum):
    UNEMPLOYMENT_WEEKLY = _Schema("week_ending", "initial_claims",
                                  "unemployment-claims", Granularity.WEEKLY)
    MEDICAID_MONTHLY = _Schema("month", "new_applications",
                               "medicaid-applications", Granularity.MONTHLY)


def _parse_date(text: str, schema: _Schema, lineno: int, origin: str) -> date:
    text = text.strip()
    try:
        if schema.granularity is Granularity.MONTHLY and len(text) == 7:
            return date.fromisoformat(f"{text}-01")
        return date.fromisoformat(text)
    except ValueError:
        raise SchemaMismatch(f"{origin}:{lineno}: bad {schema.date_column} {text!r}") from None


def load_indicator_csv(path: str | Path, schema: IndicatorSchema) -> IndicatorSeries:
    spec = schema.value
    origin = str(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{origin}: empty file") from None
        if [h.strip() for h in header] != [spec.date_column, spec.value_column]:
            raise SchemaMismatch(
                f"{origin}: expected header {spec.date_column},{spec.value_column}, got {header}")
        points = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise SchemaMismatch(f"{origin}:{lineno}: expected 2 columns, got {len(row)}")
            when = _parse_date(row[0], spec, lineno, origin)
            try:
                value = float(row[1].replace(",", ""))
            except ValueError:
                raise SchemaMismatch(f"{origin}:{lineno}: bad {spec.value_column} {row[1]!r}") from None
            if value < 0:
                raise NegativeValue(f"{origin}:{lineno}: {spec.value_column} is negative ({value})")
            points.append((when, value))
    points.sort()
    for (d0, _), (d1, _) in zip(points, points[1:]):
        if d0 == d1:
            raise NonMonotonicDates(f"{origin}: duplicate date {d1.isoformat()}")
    return IndicatorSeries(
        name=spec.series_name,
        granularity=spec.granularity,
        points=tuple(IndicatorPoint(d, v) for d, v in points),
    )
