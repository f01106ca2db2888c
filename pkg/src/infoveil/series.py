"""Core dated-series types shared by ingestion and every analysis stage."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from enum import Enum

from .errors import InvariantViolation


class Granularity(str, Enum):
    WEEKLY = "weekly"
    MONTHLY = "monthly"
    WINDOW_AGGREGATE = "window_aggregate"


@dataclass(frozen=True, order=True)
class DateRange:
    """Inclusive calendar window."""

    start: date
    end: date

    def __post_init__(self) -> None:
        if self.end < self.start:
            raise InvariantViolation(f"window end {self.end} precedes start {self.start}")

    def __contains__(self, d: date) -> bool:
        return self.start <= d <= self.end


@dataclass(frozen=True)
class RsvPoint:
    """One search-interest bucket: integer relative value on Google's 0-100 scale."""

    date: date
    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value <= 100:
            raise InvariantViolation(f"RSV {self.value} outside 0-100 at {self.date}")


@dataclass(frozen=True)
class RsvSeries:
    """Dated interest values for one (query, geography, granularity)."""

    query_id: str
    geo: str
    granularity: Granularity
    points: tuple[RsvPoint, ...]

    def __post_init__(self) -> None:
        for prev, cur in zip(self.points, self.points[1:]):
            if cur.date <= prev.date:
                raise InvariantViolation(
                    f"series {self.query_id}/{self.geo}: dates not strictly increasing at {cur.date}"
                )

    @property
    def dates(self) -> list[date]:
        return [p.date for p in self.points]

    @property
    def values(self) -> list[int]:
        return [p.value for p in self.points]

    def dated_values(self) -> list[tuple[date, float]]:
        return [(p.date, float(p.value)) for p in self.points]

    def clip(self, window: DateRange) -> "RsvSeries":
        kept = tuple(p for p in self.points if p.date in window)
        return RsvSeries(self.query_id, self.geo, self.granularity, kept)

    def is_self_normalized(self) -> bool:
        """True when the series respects max==100 (or is all zero)."""
        vals = self.values
        if not vals:
            return True
        return max(vals) == 100 or all(v == 0 for v in vals)


@dataclass(frozen=True)
class IndicatorPoint:
    date: date
    value: float

    def __post_init__(self) -> None:
        if self.value < 0:
            raise InvariantViolation(f"indicator value {self.value} negative at {self.date}")


@dataclass(frozen=True)
class IndicatorSeries:
    """External real-world series (native units, e.g. claim counts)."""

    name: str
    granularity: Granularity
    points: tuple[IndicatorPoint, ...]

    def __post_init__(self) -> None:
        for prev, cur in zip(self.points, self.points[1:]):
            if cur.date <= prev.date:
                raise InvariantViolation(f"indicator {self.name}: dates not strictly increasing at {cur.date}")

    def dated_values(self) -> list[tuple[date, float]]:
        return [(p.date, p.value) for p in self.points]


def month_window(year: int, month: int) -> DateRange:
    """Whole-calendar-month window, e.g. the January/March comparison months."""
    start = date(year, month, 1)
    if month == 12:
        end = date(year + 1, 1, 1) - timedelta(days=1)
    else:
        end = date(year, month + 1, 1) - timedelta(days=1)
    return DateRange(start, end)


def shift_months(d: date, months: int) -> date:
    """Calendar-month shift; the day of month is clamped to the target month."""
    index = d.year * 12 + (d.month - 1) + months
    year, month = divmod(index, 12)
    month += 1
    # clamp day (monthly buckets are normally day 1, but stay safe)
    for day in (d.day, 30, 29, 28):
        try:
            return date(year, month, day)
        except ValueError:
            continue
    raise AssertionError("unreachable")
