from datetime import date, datetime, timedelta, timezone

import pytest

from gatewatch.analytics import (
    EmptyStore,
    LifetimeBucketName,
    _fmt_duration,
    _percentile,
    bucket_of,
    burst_report,
    country_of_e164,
    country_report,
    language_report,
    lifetime_report,
    overlap_report,
    prefix_of_e164,
    top_services_report,
    ttfm_records,
    ttfm_report,
    volume_report,
)
from gatewatch.messages import message_key
from tests.conftest import make_message

UTC = timezone.utc
DAY = 86400.0


class TestCountryLookup:
    def test_longest_prefix_wins(self):
        assert prefix_of_e164("+447700900123") == "44"
        assert country_of_e164("+447700900123") == "GB"

    def test_nanp(self):
        assert country_of_e164("+15551230001") == "NANP"

    def test_three_digit_prefix(self):
        assert country_of_e164("+971501234567") != "unknown"

    def test_unknown_prefix(self):
        assert country_of_e164("+999123456789") == "unknown"


class TestPercentile:
    def test_linear_interpolation(self):
        vals = [1.0, 2.0, 3.0, 4.0]
        assert _percentile(vals, 0.5) == 2.5
        assert _percentile(vals, 0.25) == 1.75
        assert _percentile(vals, 0.0) == 1.0
        assert _percentile(vals, 1.0) == 4.0

    def test_single_value(self):
        assert _percentile([7.0], 0.5) == 7.0


class TestBuckets:
    def test_edges(self):
        assert bucket_of(0) is LifetimeBucketName.LT_DAY
        assert bucket_of(DAY - 1) is LifetimeBucketName.LT_DAY
        assert bucket_of(DAY) is LifetimeBucketName.DAY_TO_WEEK
        assert bucket_of(7 * DAY) is LifetimeBucketName.WEEK_TO_MONTH
        assert bucket_of(30 * DAY) is LifetimeBucketName.GT_MONTH


class TestLifetime:
    def test_hand_computed(self, store):
        # dpn A: 0..36h span, dpn B: single message (zero lifetime)
        store.insert(make_message(e164="+15551230001", minutes=0))
        store.insert(make_message(e164="+15551230001", minutes=36 * 60, text="x"))
        store.insert(make_message(e164="+15551230002", minutes=0))
        rows = lifetime_report(store)
        by_bucket = {r.bucket: r for r in rows}
        assert by_bucket[LifetimeBucketName.LT_DAY].dpn_count == 1
        assert by_bucket[LifetimeBucketName.DAY_TO_WEEK].dpn_count == 1
        assert by_bucket[LifetimeBucketName.DAY_TO_WEEK].mean == 36 * 3600
        totals = by_bucket[LifetimeBucketName.ANY]
        assert totals.dpn_count == 2
        assert totals.message_count == 3
        assert totals.mean == 18 * 3600

    def test_empty_store_raises(self, store):
        with pytest.raises(EmptyStore):
            lifetime_report(store)


class TestOverlap:
    def test_multi_gateway_share(self, store):
        store.insert(make_message(e164="+15551230001", gateway="gw-a"))
        store.insert(make_message(e164="+15551230001", gateway="gw-b"))
        store.insert(make_message(e164="+15551230002", gateway="gw-a"))
        rep = overlap_report(store)
        assert rep.multi_gateway_share == 0.5
        assert rep.multi_gateway_dpns() == ["+15551230001"]


class TestTtfm:
    def test_records_hand_computed(self, store):
        m0 = make_message(e164="+15551230001", minutes=0, text="first")
        m1 = make_message(e164="+15551230001", minutes=90, text="uber msg")
        store.insert(m0)
        store.insert(m1)
        labels = {
            message_key(m0).hex(): "unknown",
            message_key(m1).hex(): "Uber",
        }
        recs = ttfm_records(store, labels)
        assert len(recs) == 1
        assert recs[0].service == "Uber"
        assert recs[0].ttfm == 90 * 60

    def test_report_share(self, store):
        msgs = []
        for i, mins in enumerate([0, 10, 30 * 60]):
            m = make_message(e164=f"+1555123000{i}", minutes=0, text="anchor")
            u = make_message(e164=f"+1555123000{i}", minutes=mins, text="uber code")
            store.insert(m)
            store.insert(u)
            msgs.append(u)
        labels = {message_key(m).hex(): "Uber" for m in msgs}
        stats = ttfm_report(store, labels)[0]
        assert stats.service == "Uber"
        assert stats.count == 3
        assert stats.median == 10 * 60
        # two of three first-message gaps (0 min, 10 min) fall under a day;
        # the 30-hour gap does not
        assert stats.share_lt_day == pytest.approx(2 / 3)


class TestBurst:
    def test_threshold_and_activity_exclusion(self, store):
        day0 = []
        for i in range(80):
            m = make_message(e164="+15551230001", minutes=i, text=f"uber {i}")
            store.insert(m)
            day0.append(m)
        acts = []
        for i in range(80):
            m = make_message(e164="+15551230002", minutes=i, text=f"alert {i}")
            store.insert(m)
            acts.append(m)
        labels = {message_key(m).hex(): "Uber" for m in day0}
        labels.update({message_key(m).hex(): "Telegram" for m in acts})
        purposes = {message_key(m).hex(): "verification" for m in day0}
        purposes.update({message_key(m).hex(): "activity" for m in acts})
        cals = burst_report(store, labels, purposes, burst_min=72)
        flagged = [(c.dpn, c.service, sorted(c.days)) for c in cals if c.days]
        assert flagged == [("+15551230001", "Uber", [date(2025, 6, 1)])]

    def test_below_threshold_no_flag(self, store):
        msgs = [make_message(e164="+15551230001", minutes=i, text=f"m{i}") for i in range(71)]
        for m in msgs:
            store.insert(m)
        labels = {message_key(m).hex(): "Uber" for m in msgs}
        purposes = {message_key(m).hex(): "verification" for m in msgs}
        cals = burst_report(store, labels, purposes, burst_min=72)
        assert all(not c.days for c in cals)


class TestSimpleReports:
    def test_volume(self, store):
        store.insert(make_message(minutes=0))
        store.insert(make_message(minutes=5, text="b"))
        store.insert(make_message(minutes=24 * 60, text="c"))
        rows = volume_report(store)
        assert rows == [
            (date(2025, 6, 1), 2, 1),
            (date(2025, 6, 2), 1, 1),
        ]

    def test_country(self, store):
        store.insert(make_message(e164="+15551230001"))
        store.insert(make_message(e164="+447700900123"))
        rows = country_report(store)
        assert ("GB", 1, 1) in rows
        assert ("NANP", 1, 1) in rows

    def test_language_share(self, store):
        a = make_message(text="alpha")
        b = make_message(text="beta")
        store.insert(a)
        store.insert(b)
        langs = {message_key(a).hex(): "eng"}
        rows = language_report(store, langs)
        assert rows == [("eng", 1, 0.5), ("und", 1, 0.5)]

    def test_top_services_order(self, store):
        msgs = [make_message(text=f"m{i}") for i in range(3)]
        for m in msgs:
            store.insert(m)
        labels = {message_key(msgs[0]).hex(): "Uber"}
        labels[message_key(msgs[1]).hex()] = "Uber"
        labels[message_key(msgs[2]).hex()] = "PayPal"
        rows = top_services_report(store, labels)
        assert rows[0] == ("Uber", 2, 1)


class TestFormatting:
    def test_duration_units(self):
        assert _fmt_duration(3600) == "1.00h"
        assert _fmt_duration(1.5 * 86400) == "1.50d"
