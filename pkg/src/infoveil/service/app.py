"""HTTP API over committed snapshots plus the watchlist/alert surface.

Every read answers from the latest committed snapshot and carries that
snapshot's hash in the response envelope, so any number a client displays
is traceable to one immutable dataset.
"""

from __future__ import annotations

from fastapi import Body, FastAPI, Query, Request
from fastapi.responses import JSONResponse

from .. import payloads
from ..errors import (
    AllQueriesDropped,
    BadIndex,
    ConstantColumn,
    ConstantSeries,
    EmptyWindow,
    InfoveilError,
    InsufficientOverlap,
    InvariantViolation,
    KTooLarge,
    NoValidLag,
    OutOfRange,
    RateLimited,
    SnapshotNotFound,
    SourceUnavailable,
    TooShort,
    UnknownGeography,
    UnknownQuery,
    VersionConflict,
)
from ..ingest.snapshot import SnapshotStore
from ..queries import Catalog, load_catalog
from .watchlist import WatchlistEntry, WatchlistStore, alerts_payload

_STATUS_BY_ERROR = {
    UnknownQuery: 404,
    UnknownGeography: 404,
    SnapshotNotFound: 503,
    VersionConflict: 409,
    RateLimited: 429,
    SourceUnavailable: 502,
}
_BAD_REQUEST_ERRORS = (
    payloads.BadParameter, OutOfRange, KTooLarge, BadIndex, EmptyWindow, TooShort,
    InsufficientOverlap, NoValidLag, ConstantColumn, ConstantSeries,
    AllQueriesDropped, InvariantViolation,
)


def _status_for(exc: InfoveilError) -> int:
    for klass, status in _STATUS_BY_ERROR.items():
        if isinstance(exc, klass):
            return status
    if isinstance(exc, _BAD_REQUEST_ERRORS):
        return 400
    return 500


def create_app(store: SnapshotStore, watchlist_store: WatchlistStore,
               catalog: Catalog | None = None) -> FastAPI:
    catalog = catalog or load_catalog()
    app = FastAPI(title="infoveil", version="1")

    @app.exception_handler(InfoveilError)
    async def handle_domain_error(request: Request, exc: InfoveilError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"code": exc.code, "message": str(exc),
                     "detail": type(exc).__name__},
        )

    def envelope(data, snapshot=None):
        return {"snapshot_hash": snapshot.content_hash if snapshot else None,
                "data": data}

    def latest():
        return store.latest()

    @app.get("/api/v1/catalog")
    def get_catalog():
        try:
            snapshot = latest()
        except SnapshotNotFound:
            snapshot = None
        return envelope(payloads.catalog_payload(catalog), snapshot)

    @app.get("/api/v1/trends")
    def get_trends(query: str, geo: str = "US",
                   from_: str | None = Query(default=None, alias="from"),
                   to: str | None = None):
        snapshot = latest()
        window = payloads.parse_date_window(from_, to)
        return envelope(payloads.trends_payload(snapshot, query, geo, window), snapshot)

    @app.get("/api/v1/panel")
    def get_panel():
        snapshot = latest()
        if snapshot.state_window is None:
            raise UnknownQuery("snapshot carries no state window panel")
        return envelope(payloads.panel_payload(snapshot.state_window), snapshot)

    @app.get("/api/v1/change")
    def get_change(from_window: str, to_window: str, cap: float | None = None):
        snapshot = latest()
        payload = payloads.change_payload(
            snapshot, catalog,
            payloads.parse_window(from_window), payloads.parse_window(to_window), cap)
        return envelope(payload, snapshot)

    @app.get("/api/v1/correlation")
    def get_correlation():
        snapshot = latest()
        return envelope(payloads.correlation_payload(snapshot), snapshot)

    @app.get("/api/v1/pca")
    def get_pca(k: int = 2):
        snapshot = latest()
        return envelope(payloads.pca_payload(snapshot, k), snapshot)

    @app.get("/api/v1/pca/{k}/interpret")
    def get_interpret(k: int, threshold: float = 0.2, n_top: int = 5):
        snapshot = latest()
        return envelope(payloads.interpret_payload(snapshot, k, threshold, n_top), snapshot)

    @app.get("/api/v1/choropleth")
    def get_choropleth(query: str,
                       from_: str | None = Query(default=None, alias="from"),
                       to: str | None = None):
        snapshot = latest()
        requested = payloads.parse_date_window(from_, to)
        payload = payloads.choropleth_payload(snapshot, query, requested)
        return envelope(payload, snapshot)

    @app.get("/api/v1/leadlag")
    def get_leadlag(query: str, indicator: str, lag: int | None = None,
                    lag_min: int | None = None, lag_max: int | None = None):
        snapshot = latest()
        lag_range = None
        if lag_min is not None and lag_max is not None:
            lag_range = (lag_min, lag_max)
        payload = payloads.leadlag_payload(snapshot, query, indicator,
                                           lag=lag, lag_range=lag_range)
        return envelope(payload, snapshot)

    @app.get("/api/v1/events/leadtime")
    def get_leadtime(query: str, threshold: float = 50.0):
        snapshot = latest()
        return envelope(payloads.leadtime_payload(snapshot, query, threshold), snapshot)

    @app.get("/api/v1/watchlist")
    def get_watchlist():
        try:
            snapshot = latest()
        except SnapshotNotFound:
            snapshot = None
        return envelope(watchlist_store.get().to_dict(), snapshot)

    @app.put("/api/v1/watchlist")
    def put_watchlist(body: dict = Body(...)):
        entries = [WatchlistEntry.from_dict(e) for e in body.get("entries", [])]
        updated = watchlist_store.put(entries, expected_version=int(body.get("version", -1)))
        try:
            snapshot = latest()
        except SnapshotNotFound:
            snapshot = None
        return envelope(updated.to_dict(), snapshot)

    @app.get("/api/v1/alerts")
    def get_alerts():
        snapshot = latest()
        return envelope(alerts_payload(snapshot, watchlist_store.get()), snapshot)

    return app


def run_service(store: SnapshotStore, watchlist_store: WatchlistStore,
                bind: str = "127.0.0.1:8600", catalog: Catalog | None = None,
                refresh_worker=None) -> None:
    import uvicorn

    app = create_app(store, watchlist_store, catalog)
    host, _, port = bind.partition(":")
    if refresh_worker is not None:
        refresh_worker.start()
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8600), log_level="warning")
    finally:
        if refresh_worker is not None:
            refresh_worker.stop()
