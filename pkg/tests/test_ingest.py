from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings, strategies as st

from gatewatch.ingest import (
    AdapterKind,
    CrawlPlan,
    FixtureAdapter,
    GatewayConfig,
    HttpListAdapter,
    InboxSnapshot,
    ParseError,
    UnknownDpn,
    aggregator_report,
    default_psg_keywords,
    is_psg_candidate,
    load_gateway_configs,
    match_psg_keywords,
    schedule_next,
    segment_hostname,
)
from gatewatch.messages import Dpn
from gatewatch.store import encode_record
from tests.conftest import make_message

UTC = timezone.utc


class TestSegmentation:
    def test_basic_split(self):
        assert segment_hostname("receive-sms-online.com") == ["receive", "sms", "online"]

    def test_fused_words_split(self):
        assert segment_hostname("getfreesmsnumber.com") == ["get", "free", "sms", "number"]

    def test_digits_split_from_letters(self):
        assert "99" in segment_hostname("temp99.com")

    def test_tld_dropped(self):
        assert "com" not in segment_hostname("receivesms.com")

    def test_subdomains_kept(self):
        assert "sms" in segment_hostname("sms.sellaite.com")


class TestPsgKeywords:
    def test_core_sixteen_present(self):
        core = {
            "sms", "msg", "number", "numbers", "phone", "free", "get",
            "receive", "online", "temp", "otp", "inbox", "virtual",
            "verify", "verification", "code",
        }
        assert len(core) == 16
        assert core <= default_psg_keywords()

    def test_match_is_any_token_hit(self):
        assert match_psg_keywords(["receive", "sms", "online"])
        assert not match_psg_keywords(["example"])

    def test_candidate_gate(self):
        assert is_psg_candidate("receive-sms-online.com")
        assert not is_psg_candidate("example.com")
        assert not is_psg_candidate("wikipedia.org")


class TestGatewayConfig:
    def test_load_yaml(self, tmp_path):
        cfg_file = tmp_path / "gw.yaml"
        cfg_file.write_text(
            "- id: gw-a\n"
            "  adapter: fixture\n"
            "  endpoint: fixtures/gw-a\n"
            "  inbox_capacity: 25\n"
            "  min_period_s: 30\n"
            "  max_period_s: 3600\n"
            "- id: gw-b\n"
            "  adapter: fixture\n"
            "  endpoint: fixtures/gw-b\n"
            "  inbox_capacity: unbounded\n"
        )
        configs = load_gateway_configs(cfg_file)
        assert configs[0].inbox_capacity == 25
        assert configs[0].min_period == timedelta(seconds=30)
        assert configs[1].inbox_capacity is None

    def test_invalid_period_order(self):
        with pytest.raises(ValueError):
            GatewayConfig(
                id="x", adapter=AdapterKind.FIXTURE, endpoint="e",
                min_period=timedelta(hours=2), max_period=timedelta(hours=1),
            )


def _fixture_cfg(root, capacity=None):
    return GatewayConfig(
        id="gw-test", adapter=AdapterKind.FIXTURE, endpoint=str(root),
        inbox_capacity=capacity,
    )


class TestFixtureAdapter:
    def test_lists_and_fetches(self, tmp_path):
        gw_dir = tmp_path / "gw-test"
        gw_dir.mkdir()
        lines = [encode_record(make_message(minutes=i, text=f"msg {i}")) for i in range(3)]
        (gw_dir / "+15551230001.jsonl").write_text("\n".join(lines) + "\n")
        adapter = FixtureAdapter(_fixture_cfg(tmp_path), tmp_path)
        assert adapter.list_dpns() == ["+15551230001"]
        snap = adapter.fetch_inbox(Dpn.from_e164("+15551230001"))
        assert len(snap.messages) == 3
        # newest first
        assert snap.messages[0].content == "msg 2"

    def test_capacity_caps_snapshot(self, tmp_path):
        gw_dir = tmp_path / "gw-test"
        gw_dir.mkdir()
        lines = [encode_record(make_message(minutes=i, text=f"m{i}")) for i in range(5)]
        (gw_dir / "+15551230001.jsonl").write_text("\n".join(lines) + "\n")
        adapter = FixtureAdapter(_fixture_cfg(tmp_path, capacity=2), tmp_path)
        snap = adapter.fetch_inbox(Dpn.from_e164("+15551230001"))
        assert [m.content for m in snap.messages] == ["m4", "m3"]

    def test_unknown_dpn(self, tmp_path):
        (tmp_path / "gw-test").mkdir()
        adapter = FixtureAdapter(_fixture_cfg(tmp_path), tmp_path)
        with pytest.raises(UnknownDpn):
            adapter.fetch_inbox(Dpn.from_e164("+15559999999"))


class TestHttpListAdapter:
    PAGE = (
        "<div><b>32665</b><i>2025-06-10 12:00</i><p>Your code is 12345.</p></div>"
        "<div><b>VERIFY</b><i>2025-06-10 11:00</i><p>Welcome aboard!</p></div>"
    )
    RECIPE = {
        "pattern": r"<b>(?P<sender>[^<]+)</b><i>(?P<timestamp>[^<]+)</i><p>(?P<content>[^<]+)</p>"
    }

    def _cfg(self):
        return GatewayConfig(
            id="gw-http", adapter=AdapterKind.HTTP_LIST,
            endpoint="https://sms.example/num/{dpn}",
            extraction_recipe=self.RECIPE,
        )

    def test_recipe_extraction(self):
        adapter = HttpListAdapter(self._cfg(), http_get=lambda url: self.PAGE)
        adapter._allowed = lambda url: True
        snap = adapter.fetch_inbox(
            Dpn.from_e164("+15551230001"), now=datetime(2025, 6, 10, 13, 0, tzinfo=UTC)
        )
        assert len(snap.messages) == 2
        assert snap.messages[0].sender.value == "32665"
        assert snap.messages[0].content == "Your code is 12345."

    def test_unmatched_page_is_parse_error(self):
        adapter = HttpListAdapter(self._cfg(), http_get=lambda url: "<html>nope</html>")
        adapter._allowed = lambda url: True
        with pytest.raises(ParseError):
            adapter.fetch_inbox(
                Dpn.from_e164("+15551230001"),
                now=datetime(2025, 6, 10, 13, 0, tzinfo=UTC),
            )

    def test_recipe_required(self):
        with pytest.raises(ValueError):
            HttpListAdapter(
                GatewayConfig(
                    id="x", adapter=AdapterKind.HTTP_LIST, endpoint="https://e/{dpn}"
                )
            )


def _snapshot(messages, fetched_at):
    return InboxSnapshot(
        dpn=Dpn.from_e164("+15551230001"),
        messages=tuple(sorted(messages, key=lambda m: m.received.instant, reverse=True)),
        fetched_at=fetched_at,
    )


class TestScheduler:
    def _cfg(self, capacity=25):
        return GatewayConfig(
            id="gw", adapter=AdapterKind.FIXTURE, endpoint="e",
            inbox_capacity=capacity,
            min_period=timedelta(seconds=60), max_period=timedelta(hours=6),
        )

    def _plan(self):
        return CrawlPlan(
            "gw", "+15551230001",
            datetime(2025, 6, 1, tzinfo=UTC), timedelta(minutes=10),
        )

    def test_period_tracks_inbox_span(self):
        cfg = self._cfg(capacity=10)
        fetched = datetime(2025, 6, 1, 12, 0, tzinfo=UTC)
        msgs = [make_message(minutes=-i * 60, fetched_offset_h=48) for i in range(10)]
        snap = _snapshot(msgs, fetched)
        plan = schedule_next(self._plan(), cfg, snap)
        span = fetched - snap.messages[-1].received.instant
        assert plan.current_period == span * 0.5 / 10

    def test_clamped_to_bounds(self):
        cfg = self._cfg(capacity=10000)
        fetched = datetime(2025, 6, 1, 12, 0, tzinfo=UTC)
        snap = _snapshot([make_message(minutes=0, fetched_offset_h=12)], fetched)
        plan = schedule_next(self._plan(), cfg, snap)
        assert plan.current_period == cfg.min_period

    def test_unbounded_uses_max_period(self):
        cfg = self._cfg(capacity=None)
        fetched = datetime(2025, 6, 1, 12, 0, tzinfo=UTC)
        snap = _snapshot([make_message(minutes=0, fetched_offset_h=12)], fetched)
        plan = schedule_next(self._plan(), cfg, snap)
        assert plan.current_period == cfg.max_period

    def test_detected_loss_halves_period(self):
        cfg = self._cfg(capacity=3)
        base_fetch = datetime(2025, 6, 1, 12, 0, tzinfo=UTC)
        older = [make_message(minutes=i, fetched_offset_h=24, text=f"m{i}") for i in range(3)]
        prev = _snapshot(older, base_fetch)
        # next snapshot covers the same window but one message vanished
        cur = _snapshot([older[0], older[2]], base_fetch + timedelta(minutes=30))
        no_loss = schedule_next(self._plan(), cfg, _snapshot(older, base_fetch + timedelta(minutes=30)), prev)
        with_loss = schedule_next(self._plan(), cfg, cur, prev)
        assert with_loss.current_period <= no_loss.current_period / 2 or (
            with_loss.current_period == cfg.min_period
        )


@settings(max_examples=100, deadline=None)
@given(
    capacity=st.integers(1, 500),
    span_minutes=st.integers(1, 60 * 24 * 30),
)
def test_scheduler_always_within_bounds(capacity, span_minutes):
    cfg = GatewayConfig(
        id="gw", adapter=AdapterKind.FIXTURE, endpoint="e",
        inbox_capacity=capacity,
        min_period=timedelta(seconds=60), max_period=timedelta(hours=6),
    )
    fetched = datetime(2025, 6, 1, tzinfo=UTC) + timedelta(minutes=span_minutes + 1)
    msg = make_message(minutes=0, fetched_offset_h=0)
    msg = make_message(minutes=0, fetched_offset_h=span_minutes // 60 + 1)
    snap = _snapshot([msg], fetched)
    plan = schedule_next(
        CrawlPlan("gw", "+15551230001", fetched, timedelta(minutes=5)), cfg, snap
    )
    assert cfg.min_period <= plan.current_period <= cfg.max_period
    assert plan.next_fetch_at == fetched + plan.current_period


class TestAggregator:
    def test_republisher_flagged(self):
        t0 = datetime(2025, 6, 1, tzinfo=UTC)
        obs = []
        for i in range(10):
            obs.append(("gw-origin", f"k{i}", t0 + timedelta(minutes=i)))
        for i in range(10):
            obs.append(("gw-copy", f"k{i}", t0 + timedelta(hours=2, minutes=i)))
        flags = aggregator_report(obs)
        assert [f.gateway_id for f in flags] == ["gw-copy"]
        assert flags[0].duplicate_share == 1.0
        assert flags[0].median_lag_seconds > 0

    def test_origin_not_flagged(self):
        t0 = datetime(2025, 6, 1, tzinfo=UTC)
        obs = [("gw-a", f"k{i}", t0) for i in range(10)]
        assert aggregator_report(obs) == []

    def test_below_threshold_not_flagged(self):
        t0 = datetime(2025, 6, 1, tzinfo=UTC)
        obs = [("gw-a", f"k{i}", t0) for i in range(10)]
        obs += [("gw-b", "k0", t0 + timedelta(hours=1))]
        obs += [("gw-b", f"x{i}", t0) for i in range(9)]
        assert aggregator_report(obs) == []
