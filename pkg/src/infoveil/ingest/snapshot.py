"""Immutable, content-addressed dataset snapshots.

A snapshot bundles everything one acquisition run produced: the national
weekly series, the state weekly series, the window-aggregated state panel,
and the external indicator series. The content hash is a sha256 over a
canonical serialization (fixed field order, fixed number formatting), so
identical logical content hashes identically on any platform. Files are
written atomically and verified against their hash on load.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path

import numpy as np

from ..analytics import StatePanel
from ..errors import CorruptSnapshot, SnapshotNotFound
from ..serialize import canonical_json_bytes
from ..series import (
    DateRange,
    Granularity,
    IndicatorPoint,
    IndicatorSeries,
    RsvPoint,
    RsvSeries,
)

LATEST_POINTER = "LATEST"


def _series_key(s: RsvSeries) -> tuple:
    return (s.query_id, s.geo, s.granularity.value)


def _rsv_series_payload(s: RsvSeries) -> dict:
    return {
        "query_id": s.query_id,
        "geo": s.geo,
        "granularity": s.granularity.value,
        "points": [[p.date.isoformat(), p.value] for p in s.points],
    }


def _rsv_series_from(payload: dict) -> RsvSeries:
    return RsvSeries(
        query_id=payload["query_id"],
        geo=payload["geo"],
        granularity=Granularity(payload["granularity"]),
        points=tuple(RsvPoint(date.fromisoformat(d), int(v)) for d, v in payload["points"]),
    )


def _panel_payload(panel: StatePanel) -> dict:
    cells = [[None if np.isnan(v) else int(v) for v in row] for row in panel.values]
    return {
        "states": list(panel.states),
        "query_ids": list(panel.query_ids),
        "values": cells,
        "window": [panel.window.start.isoformat(), panel.window.end.isoformat()],
    }


def _panel_from(payload: dict) -> StatePanel:
    values = np.array([[np.nan if v is None else float(v) for v in row]
                       for row in payload["values"]])
    return StatePanel(
        states=tuple(payload["states"]),
        query_ids=tuple(payload["query_ids"]),
        values=values,
        window=DateRange(date.fromisoformat(payload["window"][0]),
                         date.fromisoformat(payload["window"][1])),
    )


def _indicator_payload(s: IndicatorSeries) -> dict:
    return {
        "name": s.name,
        "granularity": s.granularity.value,
        "points": [[p.date.isoformat(), p.value] for p in s.points],
    }


def _indicator_from(payload: dict) -> IndicatorSeries:
    return IndicatorSeries(
        name=payload["name"],
        granularity=Granularity(payload["granularity"]),
        points=tuple(IndicatorPoint(date.fromisoformat(d), float(v))
                     for d, v in payload["points"]),
    )


@dataclass(frozen=True)
class Snapshot:
    created_at: datetime
    catalog_version: str
    national: tuple[RsvSeries, ...]
    state_weekly: tuple[RsvSeries, ...]
    state_window: StatePanel | None
    indicators: tuple[IndicatorSeries, ...]
    content_hash: str

    @classmethod
    def build(cls, *, created_at: datetime | None = None, catalog_version: str,
              national: tuple[RsvSeries, ...] = (),
              state_weekly: tuple[RsvSeries, ...] = (),
              state_window: StatePanel | None = None,
              indicators: tuple[IndicatorSeries, ...] = ()) -> "Snapshot":
        created = created_at or datetime.now(timezone.utc)
        national = tuple(sorted(national, key=_series_key))
        state_weekly = tuple(sorted(state_weekly, key=_series_key))
        indicators = tuple(sorted(indicators, key=lambda s: s.name))
        payload = cls._payload_dict(created, catalog_version, national,
                                    state_weekly, state_window, indicators)
        digest = hashlib.sha256(canonical_json_bytes(payload)).hexdigest()
        return cls(created, catalog_version, national, state_weekly,
                   state_window, indicators, digest)

    @staticmethod
    def _payload_dict(created_at, catalog_version, national, state_weekly,
                      state_window, indicators) -> dict:
        return {
            "created_at": created_at.isoformat(),
            "catalog_version": catalog_version,
            "national": [_rsv_series_payload(s) for s in national],
            "state_weekly": [_rsv_series_payload(s) for s in state_weekly],
            "state_window": None if state_window is None else _panel_payload(state_window),
            "indicators": [_indicator_payload(s) for s in indicators],
        }

    def payload(self) -> dict:
        return self._payload_dict(self.created_at, self.catalog_version, self.national,
                                  self.state_weekly, self.state_window, self.indicators)

    def national_series(self, query_id: str) -> RsvSeries | None:
        for s in self.national:
            if s.query_id == query_id:
                return s
        return None

    def state_series(self, query_id: str, geo: str) -> RsvSeries | None:
        for s in self.state_weekly:
            if s.query_id == query_id and s.geo == geo:
                return s
        return None

    def indicator(self, name: str) -> IndicatorSeries | None:
        for s in self.indicators:
            if s.name == name:
                return s
        return None

    @classmethod
    def from_payload(cls, payload: dict, content_hash: str) -> "Snapshot":
        return cls(
            created_at=datetime.fromisoformat(payload["created_at"]),
            catalog_version=payload["catalog_version"],
            national=tuple(_rsv_series_from(p) for p in payload["national"]),
            state_weekly=tuple(_rsv_series_from(p) for p in payload["state_weekly"]),
            state_window=None if payload["state_window"] is None
            else _panel_from(payload["state_window"]),
            indicators=tuple(_indicator_from(p) for p in payload["indicators"]),
            content_hash=content_hash,
        )


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class SnapshotStore:
    """Directory of immutable snapshot files plus an atomically-swapped
    LATEST pointer; safe for concurrent readers with a single writer."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()
        self._cache: dict[str, Snapshot] = {}

    def _path(self, content_hash: str) -> Path:
        return self.root / f"{content_hash}.json"

    def save(self, snapshot: Snapshot) -> str:
        document = {"content_hash": snapshot.content_hash, **snapshot.payload()}
        with self._write_lock:
            _atomic_write(self._path(snapshot.content_hash),
                          json.dumps(document, indent=1).encode("utf-8"))
        return snapshot.content_hash

    def load(self, content_hash: str) -> Snapshot:
        cached = self._cache.get(content_hash)
        if cached is not None:
            return cached
        path = self._path(content_hash)
        if not path.exists():
            raise SnapshotNotFound(f"no snapshot {content_hash} under {self.root}")
        try:
            document = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CorruptSnapshot(f"{path} is not valid JSON: {exc}") from exc
        stored_hash = document.pop("content_hash", None)
        recomputed = hashlib.sha256(canonical_json_bytes(document)).hexdigest()
        if stored_hash != content_hash or recomputed != content_hash:
            raise CorruptSnapshot(
                f"{path}: hash mismatch (stored {stored_hash}, recomputed {recomputed})")
        snapshot = Snapshot.from_payload(document, content_hash)
        self._cache[content_hash] = snapshot
        return snapshot

    def commit(self, snapshot: Snapshot) -> str:
        """Save and atomically point LATEST at the new snapshot."""
        digest = self.save(snapshot)
        with self._write_lock:
            _atomic_write(self.root / LATEST_POINTER, digest.encode("ascii"))
        return digest

    def latest_hash(self) -> str:
        pointer = self.root / LATEST_POINTER
        if not pointer.exists():
            raise SnapshotNotFound(f"no committed snapshot under {self.root}")
        return pointer.read_text(encoding="ascii").strip()

    def latest(self) -> Snapshot:
        return self.load(self.latest_hash())

    def list_hashes(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.json"))
