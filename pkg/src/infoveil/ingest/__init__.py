from .client import RateLimiter, RetryPolicy, TrendsClient
from .indicators import IndicatorSchema, load_indicator_csv
from .snapshot import Snapshot, SnapshotStore

__all__ = [
    "IndicatorSchema",
    "RateLimiter",
    "RetryPolicy",
    "Snapshot",
    "SnapshotStore",
    "TrendsClient",
    "load_indicator_csv",
]
