"""Query series versus real-world indicators: 0-100 normalization, classical
additive seasonal adjustment, lagged correlation, best-lag search, and lead
time of a search signal against policy events."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import date, timedelta
from importlib import resources
from typing import Sequence

from .errors import (
    ConstantSeries,
    EmptySeries,
    InsufficientBaseline,
    InsufficientOverlap,
    NoValidLag,
    TooShort,
)
from .series import DateRange, Granularity, shift_months

DatedValues = Sequence[tuple[date, float]]


@dataclass(frozen=True)
class PolicyEvent:
    name: str
    date: date


@dataclass(frozen=True)
class LagCorrResult:
    lag: int      # positive = query leads indicator by this many periods
    r: float
    n: int


@dataclass(frozen=True)
class NormalizedSeries:
    values: tuple[float, ...]
    constant: bool = False


def normalize_0_100(values: Sequence[float]) -> NormalizedSeries:
    """Min-max map onto [0, 100]; a constant series maps to zeros with a flag."""
    if len(values) < 2:
        raise TooShort(f"need at least 2 points to normalize, got {len(values)}")
    lo = min(values)
    hi = max(values)
    if hi == lo:
        return NormalizedSeries(values=tuple(0.0 for _ in values), constant=True)
    span = hi - lo
    return NormalizedSeries(values=tuple(100.0 * (v - lo) / span for v in values))


def _season_index(d: date, granularity: Granularity) -> int:
    if granularity is Granularity.WEEKLY:
        return d.isocalendar()[1]
    if granularity is Granularity.MONTHLY:
        return d.month
    raise ValueError(f"seasonal adjustment needs weekly or monthly data, got {granularity}")


@dataclass(frozen=True)
class SeasonalAdjustment:
    points: tuple[tuple[date, float], ...]
    offsets: dict  # season index -> subtracted offset
    grand_mean: float


def seasonal_adjust(points: DatedValues, granularity: Granularity,
                    baseline: DateRange) -> SeasonalAdjustment:
    """Classical additive adjustment against seasonal means from the baseline years.

    Subtracts (baseline mean for the point's season index - baseline grand
    mean) from every point. Season indexes never seen in the baseline are
    left unadjusted. Additive form stays defined at the zero values common
    in search series.
    """
    pts = list(points)
    cycle = 52 if granularity is Granularity.WEEKLY else 12
    base_pts = [(d, v) for d, v in pts if d in baseline]
    if len(base_pts) < cycle:
        raise InsufficientBaseline(
            f"baseline holds {len(base_pts)} points, need a full cycle of {cycle}")
    by_index: dict[int, list[float]] = {}
    for d, v in base_pts:
        by_index.setdefault(_season_index(d, granularity), []).append(v)
    grand = math.fsum(v for _, v in base_pts) / len(base_pts)
    offsets = {idx: math.fsum(vals) / len(vals) - grand for idx, vals in by_index.items()}
    adjusted = tuple(
        (d, v - offsets.get(_season_index(d, granularity), 0.0)) for d, v in pts
    )
    return SeasonalAdjustment(points=adjusted, offsets=offsets, grand_mean=grand)


def _shift_date(d: date, periods: int, granularity: Granularity) -> date:
    if granularity is Granularity.WEEKLY:
        return d + timedelta(weeks=periods)
    if granularity is Granularity.MONTHLY:
        return shift_months(d, periods)
    raise ValueError(f"lag shifting needs weekly or monthly data, got {granularity}")


def _pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    mx = math.fsum(xs) / len(xs)
    my = math.fsum(ys) / len(ys)
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    syy = math.fsum((y - my) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        raise ConstantSeries("a series is constant over the overlap")
    return sxy / math.sqrt(sxx * syy)


def lagged_correlation(query: DatedValues, indicator: DatedValues, lag: int,
                       granularity: Granularity = Granularity.WEEKLY) -> LagCorrResult:
    """Pearson r between the query shifted forward by `lag` periods and the indicator.

    Positive lag means the query series leads: the query value observed
    `lag` periods before each indicator date is paired with that date.
    """
    shifted = {_shift_date(d, lag, granularity): v for d, v in query}
    ind = {d: v for d, v in indicator}
    common = sorted(set(shifted) & set(ind))
    if len(common) < 3:
        raise InsufficientOverlap(
            f"only {len(common)} overlapping dates at lag {lag}, need 3")
    xs = [shifted[d] for d in common]
    ys = [ind[d] for d in common]
    return LagCorrResult(lag=lag, r=_pearson(xs, ys), n=len(common))


def best_lag(query: DatedValues, indicator: DatedValues,
             lag_range: tuple[int, int],
             granularity: Granularity = Granularity.WEEKLY,
             by_magnitude: bool = False) -> LagCorrResult:
    """Scan the inclusive lag range and return the lag maximizing r.

    Signed r is maximized by default (the nowcasting uses are positive
    associations); `by_magnitude` switches to |r| for exploratory scans.
    Ties prefer the smallest non-negative lag, then the smallest |lag|.
    """
    lo, hi = lag_range
    candidates: list[LagCorrResult] = []
    for lag in range(lo, hi + 1):
        try:
            candidates.append(lagged_correlation(query, indicator, lag, granularity))
        except (InsufficientOverlap, ConstantSeries):
            continue
    if not candidates:
        raise NoValidLag(f"no lag in [{lo}, {hi}] leaves enough overlap")
    key = (lambda c: abs(c.r)) if by_magnitude else (lambda c: c.r)
    candidates.sort(key=lambda c: (-key(c), 0 if c.lag >= 0 else 1, abs(c.lag), c.lag))
    return candidates[0]


def lag_profile(query: DatedValues, indicator: DatedValues,
                lag_range: tuple[int, int],
                granularity: Granularity = Granularity.WEEKLY) -> list[LagCorrResult]:
    """All computable lags in the range, in lag order (skips invalid lags)."""
    lo, hi = lag_range
    out = []
    for lag in range(lo, hi + 1):
        try:
            out.append(lagged_correlation(query, indicator, lag, granularity))
        except (InsufficientOverlap, ConstantSeries):
            continue
    return out


@dataclass(frozen=True)
class LeadTimeResult:
    """Days between the first threshold crossing and the event (positive = signal first)."""

    crossed: bool
    lead_days: int | None = None
    crossing_date: date | None = None


def lead_time(points: DatedValues, threshold: float, event: PolicyEvent) -> LeadTimeResult:
    pts = sorted(points)
    if not pts:
        raise EmptySeries("cannot measure lead time on an empty series")
    for d, v in pts:
        if v >= threshold:
            return LeadTimeResult(crossed=True, lead_days=(event.date - d).days, crossing_date=d)
    return LeadTimeResult(crossed=False)


def weekly_to_monthly_means(points: DatedValues) -> list[tuple[date, float]]:
    """Collapse weekly points into month-start means (the monthly comparison form)."""
    buckets: dict[date, list[float]] = {}
    for d, v in points:
        buckets.setdefault(date(d.year, d.month, 1), []).append(v)
    return [(d, math.fsum(vals) / len(vals)) for d, vals in sorted(buckets.items())]


def bundled_policy_events(source: str | None = None) -> list[PolicyEvent]:
    """The 2020 federal NPI anchor events, or a `name,date` file override."""
    if source is None:
        text = resources.files("infoveil.data").joinpath("policy_events.csv").read_text(encoding="utf-8")
    else:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    events = []
    for row in csv.DictReader(text.splitlines()):
        events.append(PolicyEvent(name=row["name"], date=date.fromisoformat(row["date"])))
    return events
