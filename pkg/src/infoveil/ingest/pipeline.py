"""Assemble snapshots from a Trends-compatible HTTP source or fixture files."""

from __future__ import annotations

import csv
from datetime import date
from pathlib import Path

import numpy as np

from ..analytics import StatePanel
from ..errors import SchemaMismatch
from ..geo import all_states
from ..queries import Catalog
from ..series import DateRange, Granularity, RsvPoint, RsvSeries
from .client import TrendsClient
from .indicators import IndicatorSchema, load_indicator_csv
from .snapshot import Snapshot

NATIONAL_WINDOW = DateRange(date(2016, 1, 1), date(2020, 4, 15))
STATE_WINDOW = DateRange(date(2020, 3, 1), date(2020, 4, 15))

SERIES_CSV = "series.csv"
UNEMPLOYMENT_CSV = "unemployment_weekly.csv"
MEDICAID_CSV = "medicaid_monthly.csv"
STATE_WINDOW_CSV = "state_window.csv"


def ingest_from_source(client: TrendsClient, catalog: Catalog, *,
                       national_window: DateRange = NATIONAL_WINDOW,
                       state_window: DateRange = STATE_WINDOW,
                       include_state_weekly: bool = False,
                       indicators=()) -> Snapshot:
    """Fetch every catalog query nationally plus the state window panel."""
    national = []
    panel_columns: dict[str, dict[str, int | None]] = {}
    for query in catalog.queries:
        national.append(client.fetch_interest_over_time(
            query.expr, "US", national_window, query_id=query.id))
        rows = client.fetch_interest_by_state(query.expr, state_window)
        panel_columns[query.id] = dict(rows)
    states = all_states()
    values = np.full((len(states), len(catalog.ids)), np.nan)
    for j, qid in enumerate(catalog.ids):
        for i, s in enumerate(states):
            v = panel_columns[qid].get(s)
            if v is not None:
                values[i, j] = v
    panel = StatePanel(states=tuple(states), query_ids=tuple(catalog.ids),
                       values=values, window=state_window)
    state_weekly = []
    if include_state_weekly:
        weekly_window = DateRange(date(2019, 12, 29), state_window.end)
        for query in catalog.queries:
            for s in states:
                state_weekly.append(client.fetch_interest_over_time(
                    query.expr, s, weekly_window, query_id=query.id))
    return Snapshot.build(
        catalog_version=catalog.version,
        national=tuple(national),
        state_weekly=tuple(state_weekly),
        state_window=panel,
        indicators=tuple(indicators),
    )


def write_fixture_files(snapshot: Snapshot, out_dir: str | Path) -> list[Path]:
    """Export a snapshot as the fixture CSV set ingest_from_fixtures reads."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    series_path = out / SERIES_CSV
    with open(series_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["query_id", "geo", "granularity", "date", "value"])
        for series in list(snapshot.national) + list(snapshot.state_weekly):
            for p in series.points:
                writer.writerow([series.query_id, series.geo, series.granularity.value,
                                 p.date.isoformat(), p.value])
    written.append(series_path)

    if snapshot.state_window is not None:
        panel = snapshot.state_window
        panel_path = out / STATE_WINDOW_CSV
        with open(panel_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["query_id", "geo", "window_start", "window_end", "value"])
            for j, qid in enumerate(panel.query_ids):
                for i, s in enumerate(panel.states):
                    v = panel.values[i, j]
                    writer.writerow([qid, s, panel.window.start.isoformat(),
                                     panel.window.end.isoformat(),
                                     "" if np.isnan(v) else int(v)])
        written.append(panel_path)

    schema_files = {"unemployment-claims": (UNEMPLOYMENT_CSV, "week_ending", "initial_claims"),
                    "medicaid-applications": (MEDICAID_CSV, "month", "new_applications")}
    for indicator in snapshot.indicators:
        name, date_col, value_col = schema_files[indicator.name]
        path = out / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([date_col, value_col])
            for p in indicator.points:
                writer.writerow([p.date.isoformat(), repr(p.value) if p.value % 1 else int(p.value)])
        written.append(path)
    return written


def ingest_from_fixtures(fixture_dir: str | Path, catalog: Catalog) -> Snapshot:
    """Build a snapshot from fixture CSVs (see write_fixture_files)."""
    root = Path(fixture_dir)
    series_path = root / SERIES_CSV
    if not series_path.exists():
        raise SchemaMismatch(f"missing {SERIES_CSV} under {root}")

    buckets: dict[tuple[str, str, str], list[RsvPoint]] = {}
    with open(series_path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["query_id", "geo", "granularity", "date", "value"]
        if reader.fieldnames != expected:
            raise SchemaMismatch(f"{series_path}: expected header {','.join(expected)}")
        for row in reader:
            key = (row["query_id"], row["geo"], row["granularity"])
            buckets.setdefault(key, []).append(
                RsvPoint(date.fromisoformat(row["date"]), int(row["value"])))
    national, state_weekly = [], []
    for (qid, geo, gran), points in buckets.items():
        series = RsvSeries(query_id=qid, geo=geo, granularity=Granularity(gran),
                           points=tuple(sorted(points, key=lambda p: p.date)))
        (national if geo == "US" else state_weekly).append(series)

    panel = None
    panel_path = root / STATE_WINDOW_CSV
    if panel_path.exists():
        cells: dict[tuple[str, str], float] = {}
        window: DateRange | None = None
        qids: list[str] = []
        with open(panel_path, encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                window = DateRange(date.fromisoformat(row["window_start"]),
                                   date.fromisoformat(row["window_end"]))
                if row["query_id"] not in qids:
                    qids.append(row["query_id"])
                if row["value"] != "":
                    cells[(row["geo"], row["query_id"])] = float(row["value"])
        states = all_states()
        values = np.full((len(states), len(qids)), np.nan)
        for i, s in enumerate(states):
            for j, q in enumerate(qids):
                if (s, q) in cells:
                    values[i, j] = cells[(s, q)]
        panel = StatePanel(states=tuple(states), query_ids=tuple(qids),
                           values=values, window=window)

    indicators = []
    if (root / UNEMPLOYMENT_CSV).exists():
        indicators.append(load_indicator_csv(root / UNEMPLOYMENT_CSV,
                                             IndicatorSchema.UNEMPLOYMENT_WEEKLY))
    if (root / MEDICAID_CSV).exists():
        indicators.append(load_indicator_csv(root / MEDICAID_CSV,
                                             IndicatorSchema.MEDICAID_MONTHLY))
    return Snapshot.build(
        catalog_version=catalog.version,
        national=tuple(national),
        state_weekly=tuple(state_weekly),
        state_window=panel,
        indicators=tuple(indicators),
    )
