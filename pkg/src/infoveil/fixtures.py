"""Deterministic fixture snapshots with planted, quantizer-exact ground truth.

Everything here flows through the RSV quantizer: builders lay out raw share
targets, quantize them, and assemble a full snapshot whose analytic answers
are known in advance (period-change magnitudes, threshold-crossing dates,
lag structure against indicators, and a factor-planted state typology).
The manifest of planted truths ships alongside so tests assert against the
construction instead of re-deriving it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone

import numpy as np

from .analytics import StatePanel
from .geo import all_states
from .ingest.snapshot import Snapshot
from .queries import Catalog, load_catalog
from .rsv import RawSharePanel, ShareAxis, ShareEntry, quantize_rsv
from .series import (
    DateRange,
    Granularity,
    IndicatorPoint,
    IndicatorSeries,
    RsvPoint,
    RsvSeries,
)

# National weekly buckets: 224 weeks spanning 2016-01 to mid-April 2020.
NATIONAL_WEEKS = 224
SUNDAY_ANCHOR = date(2016, 1, 3)
MONDAY_ANCHOR = date(2016, 1, 4)

STATE_WINDOW = DateRange(date(2020, 3, 1), date(2020, 4, 15))
STATE_WEEKLY_START = date(2019, 12, 29)
STATE_WEEKLY_WEEKS = 16

# The nine queries carried with missing state cells (dropped before PCA).
MASKED_QUERY_IDS = (
    "coronavirus-infowars",
    "how-can-i-stop-coronavirus",
    "coronavirus-can-i-see-a-doctor",
    "coronavirus-afford-doctor",
    "bar-closed",
    "government-aid",
    "doctor-appointment",
    "doctor-open",
    "cant-pay-rent",
)

# Period-change plants: January-2020 mean 100, March-2020 mean as listed.
CHANGE_TARGETS = {
    "health-insurance": -18.0,
    "medicaid": -23.0,
    "medicare": -26.0,
}
CAPPED_QUERY = "social-distancing"  # Jan mean 0.5, Mar mean 75: a 150x jump

# Threshold-crossing plants (RSV >= 50).
CROSSING_DATES = {
    "social-distancing": date(2020, 3, 8),
    "how-to-make-coronavirus-mask": date(2020, 3, 23),
}

# Factor-planted typology: a southern block searching for economic support
# and away from distancing guidance, graded so the score order is fixed.
TYPOLOGY_STATES = ("US-MS", "US-LA", "US-AL", "US-AR", "US-KY")
TYPOLOGY_SALIENT = {
    "stimulus-check": 1.0,
    "disability-benefits": 1.0,
    "social-distancing": -1.0,
}

LAG_TARGETS = {"unemployment-claims": 1, "medicaid-applications": 1}


@dataclass(frozen=True)
class FixtureManifest:
    seed: int
    masked_query_ids: tuple[str, ...] = MASKED_QUERY_IDS
    change_targets: dict = field(default_factory=lambda: dict(CHANGE_TARGETS))
    capped_query: str = CAPPED_QUERY
    crossing_dates: dict = field(default_factory=lambda: dict(CROSSING_DATES))
    typology_states: tuple[str, ...] = TYPOLOGY_STATES
    typology_salient: dict = field(default_factory=lambda: dict(TYPOLOGY_SALIENT))
    lag_targets: dict = field(default_factory=lambda: dict(LAG_TARGETS))


def quantize_time_series(query_id: str, geo: str, dates: list[date],
                         targets: list[float], granularity=Granularity.WEEKLY) -> RsvSeries:
    """Quantize raw share targets into an RsvSeries (totals held constant)."""
    panel = RawSharePanel(ShareAxis.TIME_WITHIN_GEO,
                          tuple(ShareEntry(d, max(t, 0.0), 100.0)
                                for d, t in zip(dates, targets)))
    values = dict(quantize_rsv(panel))
    return RsvSeries(query_id=query_id, geo=geo, granularity=granularity,
                     points=tuple(RsvPoint(d, values[d]) for d in dates))


def quantize_state_column(states: list[str], targets: dict[str, float]) -> dict[str, int]:
    """Quantize per-state share targets; states absent from targets stay missing."""
    present = [s for s in states if s in targets]
    panel = RawSharePanel(ShareAxis.GEO_WITHIN_WINDOW,
                          tuple(ShareEntry(s, max(targets[s], 0.0), 100.0) for s in present))
    return dict(quantize_rsv(panel))


def _weekly_dates(anchor: date, n: int) -> list[date]:
    return [anchor + timedelta(weeks=i) for i in range(n)]


def _baseline_profile(rng: np.random.Generator, n: int, level: float, amp: float,
                      period: float = 52.0) -> np.ndarray:
    """Smooth wandering positive share profile with mild seasonality."""
    drift = np.cumsum(rng.normal(0, 0.6, n))
    drift -= np.linspace(drift[0], drift[-1], n)  # keep endpoints tame
    seasonal = amp * np.sin(2 * np.pi * np.arange(n) / period + rng.uniform(0, 2 * np.pi))
    return np.clip(level + seasonal + drift, 1.0, 98.0)


def _planted_change_series(march_mean: float) -> list[float]:
    """224-week target list: January 2020 weeks at 100, March at the target."""
    dates = _weekly_dates(SUNDAY_ANCHOR, NATIONAL_WEEKS)
    values = []
    for d in dates:
        if d.year == 2020 and d.month == 1:
            values.append(100.0)
        elif d.year == 2020 and d.month == 3:
            values.append(march_mean)
        elif d.year == 2020 and d.month == 2:
            values.append((100.0 + march_mean) / 2.0)
        elif d.month in (11, 12):
            values.append(88.0)  # late-year enrollment season
        else:
            values.append(70.0)
    return values


def _social_distancing_series() -> list[float]:
    """Near-zero history, first >=50 on 2020-03-08, March mean exactly 75."""
    dates = _weekly_dates(SUNDAY_ANCHOR, NATIONAL_WEEKS)
    march = {date(2020, 3, 1): 45, date(2020, 3, 8): 70, date(2020, 3, 15): 85,
             date(2020, 3, 22): 90, date(2020, 3, 29): 85}
    january = {date(2020, 1, 5): 1, date(2020, 1, 12): 0,
               date(2020, 1, 19): 0, date(2020, 1, 26): 1}
    february = {date(2020, 2, 2): 2, date(2020, 2, 9): 3,
                date(2020, 2, 16): 5, date(2020, 2, 23): 8}
    april = {date(2020, 4, 5): 100, date(2020, 4, 12): 95}
    special = {**march, **january, **february, **april}
    return [float(special.get(d, 0)) for d in dates]


def _mask_howto_series() -> tuple[list[date], list[float]]:
    """Monday-anchored weeks; first >=50 on 2020-03-23."""
    dates = _weekly_dates(MONDAY_ANCHOR, NATIONAL_WEEKS)
    special = {date(2020, 3, 2): 10, date(2020, 3, 9): 20, date(2020, 3, 16): 35,
               date(2020, 3, 23): 55, date(2020, 3, 30): 80,
               date(2020, 4, 6): 100, date(2020, 4, 13): 90}
    return dates, [float(special.get(d, 0)) for d in dates]


def _unemployment_series(rng: np.random.Generator) -> list[float]:
    """Wandering baseline with a saturation spike in the last four weeks."""
    dates = _weekly_dates(SUNDAY_ANCHOR, NATIONAL_WEEKS)
    base = _baseline_profile(rng, NATIONAL_WEEKS, level=30.0, amp=8.0)
    values = []
    for d, b in zip(dates, base):
        if d >= date(2020, 3, 22):
            values.append(100.0)
        elif d >= date(2020, 3, 15):
            values.append(74.0)
        else:
            values.append(min(float(b), 60.0))
    return values


def build_national_series(catalog: Catalog, rng: np.random.Generator) -> list[RsvSeries]:
    sundays = _weekly_dates(SUNDAY_ANCHOR, NATIONAL_WEEKS)
    out = []
    for query in catalog.queries:
        qid = query.id
        if qid in CHANGE_TARGETS:
            targets = _planted_change_series(100.0 + CHANGE_TARGETS[qid])
            out.append(quantize_time_series(qid, "US", sundays, targets))
        elif qid == "social-distancing":
            out.append(quantize_time_series(qid, "US", sundays, _social_distancing_series()))
        elif qid == "how-to-make-coronavirus-mask":
            dates, targets = _mask_howto_series()
            out.append(quantize_time_series(qid, "US", dates, targets))
        elif qid == "unemployment-benefits":
            out.append(quantize_time_series(qid, "US", sundays, _unemployment_series(rng)))
        else:
            level = float(rng.uniform(25, 70))
            amp = float(rng.uniform(3, 12))
            targets = list(_baseline_profile(rng, NATIONAL_WEEKS, level, amp))
            targets[int(rng.integers(0, NATIONAL_WEEKS))] = 98.0  # pin a clear peak
            out.append(quantize_time_series(qid, "US", sundays, targets))
    return out


def _orthogonal_noise_columns(rng: np.random.Generator, factor: np.ndarray,
                              count: int, mean: float = 55.0, spread: float = 7.0) -> list[np.ndarray]:
    """Columns with exactly zero sample correlation to the factor and to each
    other (Gram-Schmidt in state space), so the planted block stays the
    unique leading component: with 51 states, free random columns would
    produce noise loadings comparable to the 0.2 salience threshold."""
    n = len(factor)
    ones = np.ones(n) / math.sqrt(n)
    basis = [ones]
    fc = factor - factor.mean()
    basis.append(fc / np.linalg.norm(fc))
    columns = []
    for _ in range(count):
        v = rng.normal(0, 1, n)
        for b in basis:
            v -= (v @ b) * b
        norm = np.linalg.norm(v)
        v /= norm
        basis.append(v)
        columns.append(mean + spread * math.sqrt(n - 1) * v)
    return columns


def build_state_window_panel(catalog: Catalog, rng: np.random.Generator) -> StatePanel:
    """51 x 39 window panel with the typology factor planted on three queries
    and missing cells injected into the nine masked queries.

    The retained non-planted queries are built sample-orthogonal to the
    factor and to each other; quantization adds only rounding-level jitter,
    so component 1 of the retained panel is the planted block by a wide
    eigenvalue margin and the factor ordering fixes the top states exactly.
    """
    states = all_states()
    factor = np.array([float(rng.normal(0, 0.35)) for _ in states])
    for rank, s in enumerate(TYPOLOGY_STATES):
        factor[states.index(s)] = 3.20 - 0.45 * rank

    # signal-to-noise graded steeply so a positive-gain query is always the
    # largest-magnitude loading: the sign convention then orients component 1
    # toward the planted factor, never its mirror
    block_plan = {"stimulus-check": (18.0, 0.5), "disability-benefits": (15.0, 1.0),
                  "social-distancing": (-12.0, 2.0)}
    retained_noise = [q.id for q in catalog.queries
                      if q.id not in TYPOLOGY_SALIENT and q.id not in MASKED_QUERY_IDS]
    noise_columns = dict(zip(retained_noise,
                             _orthogonal_noise_columns(rng, factor, len(retained_noise))))

    columns: dict[str, dict[str, int]] = {}
    for query in catalog.queries:
        qid = query.id
        if qid in block_plan:
            gain, sigma = block_plan[qid]
            raw = 55.0 + gain * factor + rng.normal(0, sigma, len(states))
            targets = {s: float(v) for s, v in zip(states, raw)}
        elif qid in noise_columns:
            targets = {s: float(v) for s, v in zip(states, noise_columns[qid])}
        else:
            raw = 55.0 + rng.normal(0, 7.0, len(states))
            targets = {s: float(v) for s, v in zip(states, raw)}
        if qid in MASKED_QUERY_IDS:
            n_missing = int(rng.integers(2, 7))
            missing = set(rng.choice(states, size=n_missing, replace=False))
            targets = {s: t for s, t in targets.items() if s not in missing}
        columns[qid] = quantize_state_column(states, targets)

    values = np.full((len(states), len(catalog.ids)), np.nan)
    for j, qid in enumerate(catalog.ids):
        for i, s in enumerate(states):
            if s in columns[qid]:
                values[i, j] = columns[qid][s]
    return StatePanel(states=tuple(states), query_ids=tuple(catalog.ids),
                      values=values, window=STATE_WINDOW)


def build_state_weekly(catalog: Catalog, rng: np.random.Generator) -> list[RsvSeries]:
    """Per-state 16-week series for a small set of fast-moving queries."""
    dates = _weekly_dates(STATE_WEEKLY_START, STATE_WEEKLY_WEEKS)
    out = []
    for qid in ("social-distancing", "how-to-make-coronavirus-mask", "stimulus-check"):
        for s in all_states():
            ramp_start = int(rng.integers(7, 11))
            targets = []
            for i in range(STATE_WEEKLY_WEEKS):
                if i < ramp_start:
                    targets.append(float(rng.uniform(0, 8)))
                else:
                    targets.append(min(100.0, 20.0 * (i - ramp_start + 1) + float(rng.uniform(0, 8))))
            out.append(quantize_time_series(qid, s, dates, targets))
    return out


def build_indicators(national: list[RsvSeries], rng: np.random.Generator) -> list[IndicatorSeries]:
    """Indicator series planted one period behind their query counterparts."""
    by_id = {s.query_id: s for s in national}

    unemployment = by_id["unemployment-benefits"]
    claims_points = []
    prev = None
    for p in unemployment.points:
        if prev is not None:
            claims = 180000.0 + 2800.0 * prev.value + float(rng.normal(0, 1500))
            claims_points.append(IndicatorPoint(p.date, round(max(claims, 0.0), 1)))
        prev = p
    claims = IndicatorSeries("unemployment-claims", Granularity.WEEKLY, tuple(claims_points))

    from .leadlag import weekly_to_monthly_means
    medicaid_monthly = weekly_to_monthly_means(by_id["medicaid"].dated_values())
    apps_points = []
    prev_val = None
    for d, v in medicaid_monthly:
        if prev_val is not None and date(2017, 6, 1) <= d <= date(2020, 1, 1):
            apps = 900000.0 + 9000.0 * prev_val + float(rng.normal(0, 5000))
            apps_points.append(IndicatorPoint(d, round(max(apps, 0.0), 1)))
        prev_val = v
    apps = IndicatorSeries("medicaid-applications", Granularity.MONTHLY, tuple(apps_points))
    return [claims, apps]


def paper_shaped_snapshot(seed: int = 20200415,
                          catalog: Catalog | None = None) -> tuple[Snapshot, FixtureManifest]:
    """The all-in-one fixture: national trends with planted changes and
    crossings, the masked state panel with the planted typology, per-state
    weeklies, and lag-planted indicators."""
    catalog = catalog or load_catalog()
    rng = np.random.default_rng(seed)
    national = build_national_series(catalog, rng)
    panel = build_state_window_panel(catalog, rng)
    state_weekly = build_state_weekly(catalog, rng)
    indicators = build_indicators(national, rng)
    snapshot = Snapshot.build(
        created_at=datetime(2020, 4, 16, 12, 0, tzinfo=timezone.utc),
        catalog_version=catalog.version,
        national=tuple(national),
        state_weekly=tuple(state_weekly),
        state_window=panel,
        indicators=tuple(indicators),
    )
    return snapshot, FixtureManifest(seed=seed)
