from .app import create_app, run_service
from .refresh import RefreshWorker
from .watchlist import (
    Alert,
    PercentChangeOver,
    ThresholdCross,
    Watchlist,
    WatchlistEntry,
    WatchlistStore,
    alerts_payload,
    evaluate_alerts,
)

__all__ = [
    "Alert",
    "PercentChangeOver",
    "RefreshWorker",
    "ThresholdCross",
    "Watchlist",
    "WatchlistEntry",
    "WatchlistStore",
    "alerts_payload",
    "create_app",
    "evaluate_alerts",
    "run_service",
]
