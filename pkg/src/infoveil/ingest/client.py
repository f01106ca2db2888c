"""HTTP client for a Trends-compatible source.

The wire contract is deliberately minimal (documented in the README):

    GET /trends/over_time?q=<canonical expr>&geo=<code>&from=<ISO>&to=<ISO>&gran=weekly
        -> {"points": [{"date": "YYYY-MM-DD", "value": 0-100}, ...]}
    GET /trends/by_state?q=<canonical expr>&from=<ISO>&to=<ISO>
        -> {"states": [{"geo": "US-AL", "value": 0-100|null}, ...]}

Throttled (429) and transient (5xx, transport) failures retry with
exponential backoff and jitter; all requests flow through a process-wide
per-host rate limiter, so parallel fetches never exceed the configured
requests-per-minute ceiling.
"""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass
from datetime import date
from urllib.parse import urlsplit

import httpx

from ..errors import InvariantViolation, MalformedResponse, RateLimited, SourceUnavailable
from ..geo import all_states
from ..queries import QueryExpr
from ..series import DateRange, Granularity, RsvPoint, RsvSeries

DEFAULT_REQUESTS_PER_MINUTE = 30.0


@dataclass(frozen=True)
class RetryPolicy:
    attempts: int = 5
    base_delay: float = 1.0
    factor: float = 2.0
    jitter: float = 0.2  # +-20% of the scheduled delay

    def delay(self, attempt: int, rng: random.Random) -> float:
        scheduled = self.base_delay * self.factor ** attempt
        return scheduled * (1.0 + rng.uniform(-self.jitter, self.jitter))


class RateLimiter:
    """Spaces requests so a requests-per-minute ceiling is never exceeded."""

    def __init__(self, per_minute: float = DEFAULT_REQUESTS_PER_MINUTE,
                 clock=time.monotonic, sleep=time.sleep):
        if per_minute <= 0:
            raise ValueError("per_minute must be positive")
        self.interval = 60.0 / per_minute
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next_allowed = 0.0

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                if now >= self._next_allowed:
                    self._next_allowed = now + self.interval
                    return
                wait = self._next_allowed - now
            self._sleep(wait)


_shared_limiters: dict[str, RateLimiter] = {}
_shared_lock = threading.Lock()


def shared_limiter(base_url: str, per_minute: float = DEFAULT_REQUESTS_PER_MINUTE) -> RateLimiter:
    """One limiter per host, shared across every client in the process."""
    host = urlsplit(base_url).netloc
    with _shared_lock:
        if host not in _shared_limiters:
            _shared_limiters[host] = RateLimiter(per_minute)
        return _shared_limiters[host]


class TrendsClient:
    def __init__(self, base_url: str, *, policy: RetryPolicy | None = None,
                 limiter: RateLimiter | None = None, timeout: float = 10.0,
                 sleep=time.sleep, rng: random.Random | None = None):
        self.base_url = base_url.rstrip("/")
        self.policy = policy or RetryPolicy()
        self.limiter = limiter or shared_limiter(base_url)
        self._sleep = sleep
        self._rng = rng or random.Random()
        self._http = httpx.Client(timeout=timeout)

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "TrendsClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- request plumbing ---------------------------------------------------

    def _get_json(self, path: str, params: dict) -> dict:
        last_throttle = False
        last_error = "no attempts made"
        for attempt in range(self.policy.attempts):
            self.limiter.acquire()
            try:
                resp = self._http.get(f"{self.base_url}{path}", params=params)
            except httpx.HTTPError as exc:
                last_throttle = False
                last_error = f"transport error: {exc}"
            else:
                if resp.status_code == 200:
                    try:
                        body = resp.json()
                    except ValueError as exc:
                        raise MalformedResponse(f"{path}: response body is not JSON: {exc}") from exc
                    if not isinstance(body, dict):
                        raise MalformedResponse(f"{path}: expected a JSON object")
                    return body
                if resp.status_code == 429:
                    last_throttle = True
                    last_error = "throttled (429)"
                elif resp.status_code >= 500:
                    last_throttle = False
                    last_error = f"server error ({resp.status_code})"
                else:
                    raise SourceUnavailable(f"{path}: source answered {resp.status_code}")
            if attempt + 1 < self.policy.attempts:
                self._sleep(self.policy.delay(attempt, self._rng))
        if last_throttle:
            raise RateLimited(f"{path}: retry budget exhausted, last failure: {last_error}")
        raise SourceUnavailable(f"{path}: retry budget exhausted, last failure: {last_error}")

    # -- fetch operations ------------------------------------------------------

    def fetch_interest_over_time(self, expr: QueryExpr, geo: str, window: DateRange,
                                 granularity: Granularity = Granularity.WEEKLY,
                                 *, query_id: str | None = None) -> RsvSeries:
        body = self._get_json("/trends/over_time", {
            "q": expr.canonical_text,
            "geo": geo,
            "from": window.start.isoformat(),
            "to": window.end.isoformat(),
            "gran": granularity.value,
        })
        raw_points = body.get("points")
        if not isinstance(raw_points, list):
            raise MalformedResponse("over_time: missing 'points' list")
        points = []
        for entry in raw_points:
            points.append(RsvPoint(_parse_point_date(entry), _parse_rsv_value(entry, allow_null=False)))
        try:
            series = RsvSeries(query_id=query_id or expr.canonical_text, geo=geo,
                               granularity=granularity, points=tuple(points))
        except InvariantViolation as exc:
            raise MalformedResponse(f"over_time: {exc}") from exc
        if not series.is_self_normalized():
            raise MalformedResponse("over_time: series max is not 100 (and not all-zero)")
        return series

    def fetch_interest_by_state(self, expr: QueryExpr, window: DateRange) -> list[tuple[str, int | None]]:
        body = self._get_json("/trends/by_state", {
            "q": expr.canonical_text,
            "from": window.start.isoformat(),
            "to": window.end.isoformat(),
        })
        raw_states = body.get("states")
        if not isinstance(raw_states, list):
            raise MalformedResponse("by_state: missing 'states' list")
        known = all_states()
        values: dict[str, int | None] = {}
        for entry in raw_states:
            geo = entry.get("geo") if isinstance(entry, dict) else None
            if geo not in known:
                raise MalformedResponse(f"by_state: unknown geography {geo!r}")
            values[geo] = _parse_rsv_value(entry, allow_null=True)
        present = [v for v in values.values() if v is not None]
        if present and any(present) and max(present) != 100:
            raise MalformedResponse("by_state: present values do not peak at 100")
        return [(geo, values.get(geo)) for geo in known]


def _parse_point_date(entry) -> date:
    if not isinstance(entry, dict) or "date" not in entry:
        raise MalformedResponse(f"bad point entry {entry!r}")
    try:
        return date.fromisoformat(str(entry["date"]))
    except ValueError as exc:
        raise MalformedResponse(f"bad point date {entry['date']!r}") from exc


def _parse_rsv_value(entry, *, allow_null: bool) -> int | None:
    if not isinstance(entry, dict) or "value" not in entry:
        raise MalformedResponse(f"bad value entry {entry!r}")
    value = entry["value"]
    if value is None and allow_null:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
        raise MalformedResponse(f"non-integer RSV value {value!r}")
    value = int(value)
    if not 0 <= value <= 100:
        raise MalformedResponse(f"RSV value {value} outside 0-100")
    return value
