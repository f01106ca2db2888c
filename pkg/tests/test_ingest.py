import math
from datetime import date, timedelta

import pytest

from infoveil.errors import (
    CorruptSnapshot,
    MalformedResponse,
    NegativeValue,
    NonMonotonicDates,
    RateLimited,
    SchemaMismatch,
    SnapshotNotFound,
    SourceUnavailable,
)
from infoveil.fixtures import paper_shaped_snapshot
from infoveil.geo import all_states
from infoveil.ingest import (
    IndicatorSchema,
    RateLimiter,
    RetryPolicy,
    SnapshotStore,
    TrendsClient,
    load_indicator_csv,
)
from infoveil.ingest.mock import MockTrendsServer
from infoveil.queries import load_catalog, parse_query_expr
from infoveil.series import DateRange, Granularity

FAST_POLICY = RetryPolicy(attempts=5, base_delay=0.002, factor=2.0, jitter=0.2)
FAST_LIMITER = lambda: RateLimiter(per_minute=60000)  # noqa: E731 - test convenience

WINDOW = DateRange(date(2020, 1, 5), date(2020, 3, 1))


def weekly_points(start, values):
    return [((start + timedelta(weeks=i)).isoformat(), v) for i, v in enumerate(values)]


@pytest.fixture()
def server():
    srv = MockTrendsServer()
    srv.add_over_time("medicaid", "US", weekly_points(date(2020, 1, 5), [40, 55, 100, 80]))
    entries = [(s, 50) for s in all_states()]
    entries[3] = (entries[3][0], 100)
    srv.add_by_state("medicaid", entries)
    with srv:
        yield srv


def client_for(srv, **kwargs):
    kwargs.setdefault("policy", FAST_POLICY)
    kwargs.setdefault("limiter", FAST_LIMITER())
    return TrendsClient(srv.url, **kwargs)


class TestFetchOverTime:
    def test_valid_series_is_normalized(self, server):
        with client_for(server) as client:
            series = client.fetch_interest_over_time(
                parse_query_expr("medicaid"), "US", WINDOW, query_id="medicaid")
        assert max(series.values) == 100
        assert series.query_id == "medicaid"
        assert series.dates[0] == date(2020, 1, 5)

    def test_recovers_after_three_throttles(self, server):
        server.script(("status", 429), ("status", 429), ("status", 429))
        with client_for(server) as client:
            series = client.fetch_interest_over_time(parse_query_expr("medicaid"), "US", WINDOW)
        assert len(server.request_log) == 4
        assert max(series.values) == 100

    def test_throttle_budget_exhausted(self, server):
        server.script(*[("status", 429)] * 6)
        with client_for(server) as client:
            with pytest.raises(RateLimited):
                client.fetch_interest_over_time(parse_query_expr("medicaid"), "US", WINDOW)
        assert len(server.request_log) == 5  # attempts capped by policy

    def test_truncated_body_is_malformed(self, server):
        server.script(("truncate",))
        with client_for(server) as client:
            with pytest.raises(MalformedResponse):
                client.fetch_interest_over_time(parse_query_expr("medicaid"), "US", WINDOW)
        assert len(server.request_log) == 1  # contract violations do not retry

    def test_unknown_query_is_source_unavailable(self, server):
        with client_for(server) as client:
            with pytest.raises(SourceUnavailable):
                client.fetch_interest_over_time(parse_query_expr("nope"), "US", WINDOW)

    def test_server_errors_retry_then_fail(self, server):
        server.script(*[("status", 503)] * 5)
        with client_for(server) as client:
            with pytest.raises(SourceUnavailable):
                client.fetch_interest_over_time(parse_query_expr("medicaid"), "US", WINDOW)
        assert len(server.request_log) == 5

    def test_unnormalized_series_rejected(self, server):
        server.add_over_time("weird", "US", weekly_points(date(2020, 1, 5), [10, 20, 30]))
        with client_for(server) as client:
            with pytest.raises(MalformedResponse):
                client.fetch_interest_over_time(parse_query_expr("weird"), "US", WINDOW)

    def test_out_of_range_value_rejected(self, server):
        server.add_over_time("big", "US", weekly_points(date(2020, 1, 5), [50, 101]))
        with client_for(server) as client:
            with pytest.raises(MalformedResponse):
                client.fetch_interest_over_time(parse_query_expr("big"), "US", WINDOW)


class TestFetchByState:
    def test_51_entries_with_max_100(self, server):
        with client_for(server) as client:
            rows = client.fetch_interest_by_state(parse_query_expr("medicaid"), WINDOW)
        assert len(rows) == 51
        present = [v for _, v in rows if v is not None]
        assert max(present) == 100

    def test_absent_states_become_missing_markers(self, server):
        keep = all_states()[3:]
        entries = [(s, 70) for s in keep]
        entries[0] = (entries[0][0], 100)
        server.add_by_state("partial", entries)
        with client_for(server) as client:
            rows = client.fetch_interest_by_state(parse_query_expr("partial"), WINDOW)
        missing = [g for g, v in rows if v is None]
        assert missing == all_states()[:3]
        assert len(rows) == 51

    def test_all_zero_panel_allowed(self, server):
        server.add_by_state("zero", [(s, 0) for s in all_states()])
        with client_for(server) as client:
            rows = client.fetch_interest_by_state(parse_query_expr("zero"), WINDOW)
        assert all(v == 0 for _, v in rows)

    def test_missing_peak_rejected(self, server):
        server.add_by_state("flat", [(s, 40) for s in all_states()])
        with client_for(server) as client:
            with pytest.raises(MalformedResponse):
                client.fetch_interest_by_state(parse_query_expr("flat"), WINDOW)


def test_rate_limit_ceiling_respected(server):
    # 1200 requests/min -> at least 50ms between requests, checked via the
    # mock server's own timestamp log.
    limiter = RateLimiter(per_minute=1200)
    with client_for(server, limiter=limiter) as client:
        for _ in range(4):
            client.fetch_interest_over_time(parse_query_expr("medicaid"), "US", WINDOW)
    stamps = [t for t, _ in server.request_log]
    gaps = [b - a for a, b in zip(stamps, stamps[1:])]
    assert all(gap >= 0.05 - 0.005 for gap in gaps), gaps


def test_backoff_delays_grow_exponentially(server):
    server.script(*[("status", 429)] * 4)
    sleeps = []
    with client_for(server, sleep=sleeps.append) as client:
        client.fetch_interest_over_time(parse_query_expr("medicaid"), "US", WINDOW)
    assert len(sleeps) == 4
    base = FAST_POLICY.base_delay
    for i, s in enumerate(sleeps):
        scheduled = base * 2 ** i
        assert scheduled * 0.8 <= s <= scheduled * 1.2


class TestIndicatorCsv:
    def test_bundled_unemployment_fixture(self):
        from importlib import resources
        path = resources.files("infoveil.data").joinpath("unemployment_weekly.csv")
        series = load_indicator_csv(str(path), IndicatorSchema.UNEMPLOYMENT_WEEKLY)
        raw_rows = path.read_text().strip().splitlines()[1:]
        assert len(series.points) == len(raw_rows)
        assert len(series.points) >= 220
        assert series.granularity is Granularity.WEEKLY

    def test_bundled_medicaid_fixture(self):
        from importlib import resources
        path = resources.files("infoveil.data").joinpath("medicaid_monthly.csv")
        series = load_indicator_csv(str(path), IndicatorSchema.MEDICAID_MONTHLY)
        assert series.points[0].date == date(2017, 6, 1)
        assert series.points[-1].date == date(2020, 1, 1)

    def test_shuffled_rows_are_sorted(self, tmp_path):
        path = tmp_path / "claims.csv"
        path.write_text("week_ending,initial_claims\n"
                        "2020-01-18,210000\n2020-01-04,200000\n2020-01-11,190000\n")
        series = load_indicator_csv(path, IndicatorSchema.UNEMPLOYMENT_WEEKLY)
        assert [p.date.day for p in series.points] == [4, 11, 18]
        assert {p.value for p in series.points} == {200000.0, 190000.0, 210000.0}

    def test_negative_value_rejected(self, tmp_path):
        path = tmp_path / "claims.csv"
        path.write_text("week_ending,initial_claims\n2020-01-04,-5\n")
        with pytest.raises(NegativeValue):
            load_indicator_csv(path, IndicatorSchema.UNEMPLOYMENT_WEEKLY)

    def test_duplicate_dates_rejected(self, tmp_path):
        path = tmp_path / "claims.csv"
        path.write_text("week_ending,initial_claims\n2020-01-04,10\n2020-01-04,20\n")
        with pytest.raises(NonMonotonicDates):
            load_indicator_csv(path, IndicatorSchema.UNEMPLOYMENT_WEEKLY)

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "claims.csv"
        path.write_text("week,claims\n2020-01-04,10\n")
        with pytest.raises(SchemaMismatch):
            load_indicator_csv(path, IndicatorSchema.UNEMPLOYMENT_WEEKLY)

    def test_month_format_accepted(self, tmp_path):
        path = tmp_path / "apps.csv"
        path.write_text("month,new_applications\n2019-05,120000\n2019-06,130000\n")
        series = load_indicator_csv(path, IndicatorSchema.MEDICAID_MONTHLY)
        assert series.points[0].date == date(2019, 5, 1)


@pytest.fixture(scope="module")
def snapshot():
    snap, _ = paper_shaped_snapshot()
    return snap


class TestSnapshotStore:
    def test_roundtrip_equality(self, tmp_path, snapshot):
        store = SnapshotStore(tmp_path)
        digest = store.save(snapshot)
        assert digest == snapshot.content_hash
        again = SnapshotStore(tmp_path).load(digest)
        assert again == snapshot

    def test_hash_is_deterministic_for_same_content(self, snapshot):
        rebuilt, _ = paper_shaped_snapshot()
        assert rebuilt.content_hash == snapshot.content_hash

    def test_tampered_file_detected(self, tmp_path, snapshot):
        store = SnapshotStore(tmp_path)
        digest = store.save(snapshot)
        path = store._path(digest)
        data = bytearray(path.read_bytes())
        idx = data.index(b'"US"')
        data[idx + 1:idx + 3] = b"XX"
        path.write_bytes(bytes(data))
        with pytest.raises(CorruptSnapshot):
            SnapshotStore(tmp_path).load(digest)

    def test_unknown_hash(self, tmp_path):
        with pytest.raises(SnapshotNotFound):
            SnapshotStore(tmp_path).load("0" * 64)

    def test_latest_pointer_follows_commits(self, tmp_path, snapshot):
        store = SnapshotStore(tmp_path)
        with pytest.raises(SnapshotNotFound):
            store.latest()
        store.commit(snapshot)
        assert store.latest().content_hash == snapshot.content_hash


class TestIngestFromMock:
    def test_mock_roundtrips_fixture_content(self, snapshot):
        snap = snapshot
        catalog = load_catalog()
        with MockTrendsServer.from_snapshot(snap, catalog) as srv:
            with client_for(srv) as client:
                query = catalog.get("social-distancing")
                window = DateRange(date(2016, 1, 1), date(2020, 4, 15))
                series = client.fetch_interest_over_time(
                    query.expr, "US", window, query_id=query.id)
                original = snap.national_series("social-distancing")
                assert series.points == original.points
                rows = client.fetch_interest_by_state(query.expr, snap.state_window.window)
                j = snap.state_window.query_ids.index("social-distancing")
                for (geo, value), i in zip(rows, range(51)):
                    cell = snap.state_window.values[i, j]
                    expected = None if math.isnan(cell) else int(cell)
                    assert value == expected
