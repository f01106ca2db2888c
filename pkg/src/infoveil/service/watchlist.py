"""Watchlists and alert evaluation.

A watchlist is a versioned list of (query, geography, rule) entries kept in
a single JSON file with atomic writes; the version increments on every
mutation and stale writers get a conflict. Alert evaluation is a pure
function of (snapshot, watchlist): rules over missing data yield no alert.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

from ..analytics import percent_change
from ..errors import EmptyWindow, InvariantViolation, UnknownQuery, VersionConflict
from ..queries import Catalog
from ..series import DateRange


@dataclass(frozen=True)
class ThresholdCross:
    rsv_value: int

    def to_dict(self) -> dict:
        return {"kind": "threshold_cross", "rsv_value": self.rsv_value}


@dataclass(frozen=True)
class PercentChangeOver:
    window_weeks: int
    threshold_percent: float

    def to_dict(self) -> dict:
        return {"kind": "percent_change_over", "window_weeks": self.window_weeks,
                "threshold_percent": self.threshold_percent}


Rule = ThresholdCross | PercentChangeOver


def rule_from_dict(payload: dict) -> Rule:
    kind = payload.get("kind")
    if kind == "threshold_cross":
        return ThresholdCross(rsv_value=int(payload["rsv_value"]))
    if kind == "percent_change_over":
        return PercentChangeOver(window_weeks=int(payload["window_weeks"]),
                                 threshold_percent=float(payload["threshold_percent"]))
    raise InvariantViolation(f"unknown rule kind {kind!r}")


@dataclass(frozen=True)
class WatchlistEntry:
    query_id: str
    geo: str
    rule: Rule

    def to_dict(self) -> dict:
        return {"query_id": self.query_id, "geo": self.geo, "rule": self.rule.to_dict()}

    @classmethod
    def from_dict(cls, payload: dict) -> "WatchlistEntry":
        return cls(query_id=payload["query_id"], geo=payload["geo"],
                   rule=rule_from_dict(payload["rule"]))


@dataclass(frozen=True)
class Watchlist:
    entries: tuple[WatchlistEntry, ...]
    version: int

    def to_dict(self) -> dict:
        return {"version": self.version, "entries": [e.to_dict() for e in self.entries]}


class WatchlistStore:
    """Single-writer / multi-reader JSON-file store with optimistic versioning."""

    def __init__(self, path: str | Path, catalog: Catalog | None = None):
        self.path = Path(path)
        self.catalog = catalog
        self._lock = threading.Lock()
        if not self.path.exists():
            self._write(Watchlist(entries=(), version=0))

    def _write(self, watchlist: Watchlist) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=".wl-")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(watchlist.to_dict(), fh, indent=1)
        os.replace(tmp, self.path)

    def get(self) -> Watchlist:
        payload = json.loads(self.path.read_text(encoding="utf-8"))
        return Watchlist(
            entries=tuple(WatchlistEntry.from_dict(e) for e in payload["entries"]),
            version=int(payload["version"]),
        )

    def put(self, entries: list[WatchlistEntry], expected_version: int) -> Watchlist:
        with self._lock:
            current = self.get()
            if current.version != expected_version:
                raise VersionConflict(
                    f"watchlist is at version {current.version}, caller expected {expected_version}")
            if self.catalog is not None:
                for entry in entries:
                    if entry.query_id not in self.catalog:
                        raise UnknownQuery(f"watchlist entry references unknown query "
                                           f"{entry.query_id!r}")
            updated = Watchlist(entries=tuple(entries), version=current.version + 1)
            self._write(updated)
            return updated


@dataclass(frozen=True)
class Alert:
    query_id: str
    geo: str
    rule: Rule
    trigger_date: date
    observed_value: float | None
    snapshot_hash: str

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "geo": self.geo,
            "rule": self.rule.to_dict(),
            "trigger_date": self.trigger_date.isoformat(),
            "observed_value": self.observed_value,
            "snapshot_hash": self.snapshot_hash,
        }


def _series_for(snapshot, query_id: str, geo: str):
    if geo == "US":
        return snapshot.national_series(query_id)
    return snapshot.state_series(query_id, geo)


def _threshold_alert(snapshot, entry: WatchlistEntry) -> Alert | None:
    series = _series_for(snapshot, entry.query_id, entry.geo)
    if series is None:
        return None
    for point in series.points:
        if point.value >= entry.rule.rsv_value:
            return Alert(entry.query_id, entry.geo, entry.rule, point.date,
                         float(point.value), snapshot.content_hash)
    return None


def _change_alert(snapshot, entry: WatchlistEntry) -> Alert | None:
    series = _series_for(snapshot, entry.query_id, entry.geo)
    if series is None or not series.points:
        return None
    rule = entry.rule
    last = series.points[-1].date
    span = timedelta(days=rule.window_weeks * 7)
    to_window = DateRange(last - span + timedelta(days=1), last)
    from_window = DateRange(to_window.start - span, to_window.start - timedelta(days=1))
    try:
        result = percent_change(series.dated_values(), from_window, to_window)
    except EmptyWindow:
        return None
    if result.zero_baseline:
        recent = [p.value for p in series.points if p.date in to_window]
        if any(recent):  # a topic appearing from nothing always clears the bar
            return Alert(entry.query_id, entry.geo, rule, last, None, snapshot.content_hash)
        return None
    if result.value is not None and result.value > rule.threshold_percent:
        return Alert(entry.query_id, entry.geo, rule, last, result.value,
                     snapshot.content_hash)
    return None


def evaluate_alerts(snapshot, watchlist: Watchlist) -> list[Alert]:
    """Deterministic alert pass over one snapshot; missing data never fails."""
    alerts = []
    for entry in watchlist.entries:
        if isinstance(entry.rule, ThresholdCross):
            alert = _threshold_alert(snapshot, entry)
        else:
            alert = _change_alert(snapshot, entry)
        if alert is not None:
            alerts.append(alert)
    return alerts


def alerts_payload(snapshot, watchlist: Watchlist) -> dict:
    return {
        "snapshot_hash": snapshot.content_hash,
        "watchlist_version": watchlist.version,
        "alerts": [a.to_dict() for a in evaluate_alerts(snapshot, watchlist)],
    }
