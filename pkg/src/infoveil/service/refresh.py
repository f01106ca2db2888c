"""Background re-ingestion: one worker, atomic snapshot commits."""

from __future__ import annotations

import logging
import threading

from ..ingest.pipeline import ingest_from_source
from ..ingest.snapshot import SnapshotStore
from ..queries import Catalog

logger = logging.getLogger(__name__)


class RefreshWorker:
    """Periodically rebuilds a snapshot from the configured source and commits
    it; readers keep seeing the previous snapshot until the commit lands."""

    def __init__(self, client, catalog: Catalog, store: SnapshotStore,
                 period_seconds: float, **ingest_kwargs):
        self.client = client
        self.catalog = catalog
        self.store = store
        self.period_seconds = period_seconds
        self.ingest_kwargs = ingest_kwargs
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def refresh_once(self) -> str:
        snapshot = ingest_from_source(self.client, self.catalog, **self.ingest_kwargs)
        return self.store.commit(snapshot)

    def _loop(self) -> None:
        while not self._stop.wait(self.period_seconds):
            try:
                digest = self.refresh_once()
                logger.info("committed snapshot %s", digest)
            except Exception:
                logger.exception("scheduled re-ingestion failed; keeping previous snapshot")

    def start(self) -> None:
        self._thread = threading.Thread(target=self._loop, daemon=True, name="infoveil-refresh")
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)
