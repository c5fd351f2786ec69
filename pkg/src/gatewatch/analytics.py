"""Dataset-level reports: lifetimes, gateway overlap, countries, TTFM, bursts.

All reports are pure functions of the store plus label state, so re-running
them yields byte-identical CSV.
"""

from __future__ import annotations

import csv
import json
from collections import Counter, defaultdict
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from enum import Enum
from importlib import resources
from pathlib import Path

from gatewatch.messages import Dpn, message_key
from gatewatch.store import MessageStore

HOUR = 3600.0
DAY = 86400.0
WEEK = 7 * DAY
MONTH = 30 * DAY  # fixed 30-day month for bucket boundaries


def _load_calling_codes() -> dict[str, str]:
    with resources.files("gatewatch.data").joinpath("calling_codes.json").open(
        encoding="utf-8"
    ) as fh:
        return json.load(fh)


_CALLING_CODES = _load_calling_codes()


def prefix_of_e164(e164: str) -> str | None:
    digits = e164.lstrip("+")
    for length in (3, 2, 1):  # longest-prefix match
        if digits[:length] in _CALLING_CODES:
            return digits[:length]
    return None


def country_of_e164(e164: str) -> str:
    prefix = prefix_of_e164(e164)
    return _CALLING_CODES[prefix] if prefix else "unknown"


def country_of(dpn: Dpn) -> str:
    return country_of_e164(dpn.e164)


class EmptyStore(RuntimeError):
    pass


def _percentile(sorted_values: list[float], q: float) -> float:
    """Linear-interpolation percentile over pre-sorted values, q in [0, 1]."""
    if not sorted_values:
        raise ValueError("no values")
    if len(sorted_values) == 1:
        return sorted_values[0]
    pos = q * (len(sorted_values) - 1)
    lo = int(pos)
    hi = min(lo + 1, len(sorted_values) - 1)
    frac = pos - lo
    return sorted_values[lo] * (1 - frac) + sorted_values[hi] * frac


class LifetimeBucketName(str, Enum):
    LT_DAY = "lt_day"
    DAY_TO_WEEK = "day_to_week"
    WEEK_TO_MONTH = "week_to_month"
    GT_MONTH = "gt_month"
    ANY = "any"


def bucket_of(lifetime_seconds: float) -> LifetimeBucketName:
    if lifetime_seconds < DAY:
        return LifetimeBucketName.LT_DAY
    if lifetime_seconds < WEEK:
        return LifetimeBucketName.DAY_TO_WEEK
    if lifetime_seconds < MONTH:
        return LifetimeBucketName.WEEK_TO_MONTH
    return LifetimeBucketName.GT_MONTH


@dataclass
class LifetimeBucket:
    bucket: LifetimeBucketName
    mean: float  # seconds
    q1: float
    q2: float
    q3: float
    dpn_count: int
    message_count: int
    service_count: int


def _dpn_spans(store: MessageStore) -> dict[str, tuple[datetime, datetime]]:
    spans: dict[str, tuple[datetime, datetime]] = {}
    for msg in store:
        e164 = msg.receiver.e164
        t = msg.received.instant
        if e164 in spans:
            lo, hi = spans[e164]
            spans[e164] = (min(lo, t), max(hi, t))
        else:
            spans[e164] = (t, t)
    return spans


def lifetime_report(
    store: MessageStore, labels: dict[str, str] | None = None
) -> list[LifetimeBucket]:
    """Bucketed DPN lifetimes (< 1 d, 1 d - 1 w, 1 w - 1 m, >= 1 m) plus a
    totals row. Lifetime = last seen - first seen, across all gateways."""
    spans = _dpn_spans(store)
    if not spans:
        raise EmptyStore("no messages in store")

    msg_counts: Counter[str] = Counter()
    services: dict[str, set[str]] = defaultdict(set)
    for msg in store:
        e164 = msg.receiver.e164
        msg_counts[e164] += 1
        if labels:
            svc = labels.get(message_key(msg).hex())
            if svc and svc != "unknown":
                services[e164].add(svc)

    per_bucket: dict[LifetimeBucketName, list[str]] = defaultdict(list)
    lifetimes = {
        e164: (hi - lo).total_seconds() for e164, (lo, hi) in spans.items()
    }
    for e164, lifetime in lifetimes.items():
        per_bucket[bucket_of(lifetime)].append(e164)

    def summarize(name: LifetimeBucketName, members: list[str]) -> LifetimeBucket:
        values = sorted(lifetimes[m] for m in members)
        return LifetimeBucket(
            bucket=name,
            mean=sum(values) / len(values) if values else 0.0,
            q1=_percentile(values, 0.25) if values else 0.0,
            q2=_percentile(values, 0.50) if values else 0.0,
            q3=_percentile(values, 0.75) if values else 0.0,
            dpn_count=len(members),
            message_count=sum(msg_counts[m] for m in members),
            service_count=len(set().union(*(services[m] for m in members)))
            if members and services
            else 0,
        )

    order = [
        LifetimeBucketName.LT_DAY,
        LifetimeBucketName.DAY_TO_WEEK,
        LifetimeBucketName.WEEK_TO_MONTH,
        LifetimeBucketName.GT_MONTH,
    ]
    rows = [summarize(name, per_bucket.get(name, [])) for name in order]
    rows.append(summarize(LifetimeBucketName.ANY, list(lifetimes)))
    return rows


@dataclass
class OverlapReport:
    gateway_sets: dict[str, set[str]]  # e164 -> gateways
    multi_gateway_share: float

    def multi_gateway_dpns(self) -> list[str]:
        return sorted(e for e, g in self.gateway_sets.items() if len(g) > 1)


def overlap_report(store: MessageStore) -> OverlapReport:
    sightings = store.all_sightings()
    per_dpn: dict[str, set[str]] = defaultdict(set)
    for msg in store:
        khex = message_key(msg).hex()
        per_dpn[msg.receiver.e164] |= sightings.get(khex, {msg.gateway_id})
    if not per_dpn:
        return OverlapReport({}, 0.0)
    multi = sum(1 for g in per_dpn.values() if len(g) > 1)
    return OverlapReport(dict(per_dpn), multi / len(per_dpn))


@dataclass(frozen=True)
class TtfmRecord:
    dpn: str
    service: str
    ttfm: float  # seconds, >= 0


@dataclass
class TtfmStats:
    service: str
    count: int
    median: float
    q1: float
    q3: float
    share_lt_day: float


def ttfm_records(store: MessageStore, labels: dict[str, str]) -> list[TtfmRecord]:
    first_seen: dict[str, datetime] = {}
    first_from: dict[tuple[str, str], datetime] = {}
    for msg in store:
        e164 = msg.receiver.e164
        t = msg.received.instant
        if e164 not in first_seen or t < first_seen[e164]:
            first_seen[e164] = t
        svc = labels.get(message_key(msg).hex())
        if svc and svc != "unknown":
            k = (e164, svc)
            if k not in first_from or t < first_from[k]:
                first_from[k] = t
    records = [
        TtfmRecord(dpn=e164, service=svc, ttfm=(t - first_seen[e164]).total_seconds())
        for (e164, svc), t in first_from.items()
    ]
    records.sort(key=lambda r: (r.service, r.dpn))
    return records


def ttfm_report(store: MessageStore, labels: dict[str, str]) -> list[TtfmStats]:
    per_service: dict[str, list[float]] = defaultdict(list)
    for rec in ttfm_records(store, labels):
        per_service[rec.service].append(rec.ttfm)
    stats = []
    for service in sorted(per_service):
        values = sorted(per_service[service])
        stats.append(
            TtfmStats(
                service=service,
                count=len(values),
                median=_percentile(values, 0.5),
                q1=_percentile(values, 0.25),
                q3=_percentile(values, 0.75),
                share_lt_day=sum(1 for v in values if v < DAY) / len(values),
            )
        )
    return stats


@dataclass
class BurstCalendar:
    dpn: str
    service: str
    days: set[date]


def burst_report(
    store: MessageStore,
    labels: dict[str, str],
    purposes: dict[str, str],
    burst_min: int = 72,
    top_n: int | None = None,
) -> list[BurstCalendar]:
    """Days on which a (DPN, service) pair received at least ``burst_min``
    account-related messages. Activity-purpose messages do not count."""
    counts: dict[tuple[str, str], Counter[date]] = defaultdict(Counter)
    totals: Counter[tuple[str, str]] = Counter()
    for msg in store:
        khex = message_key(msg).hex()
        svc = labels.get(khex)
        if not svc or svc == "unknown":
            continue
        totals[(msg.receiver.e164, svc)] += 1
        if purposes.get(khex) == "activity":
            continue
        counts[(msg.receiver.e164, svc)][msg.received.instant.date()] += 1

    pairs = sorted(counts)
    if top_n is not None:
        by_service: dict[str, list[tuple[str, str]]] = defaultdict(list)
        for pair in pairs:
            by_service[pair[1]].append(pair)
        kept = []
        for svc in sorted(by_service):
            ranked = sorted(by_service[svc], key=lambda p: (-totals[p], p[0]))
            kept.extend(sorted(ranked[:top_n]))
        pairs = kept

    calendars = []
    for dpn, svc in pairs:
        days = {d for d, n in counts[(dpn, svc)].items() if n >= burst_min}
        calendars.append(BurstCalendar(dpn=dpn, service=svc, days=days))
    return calendars


def volume_report(store: MessageStore) -> list[tuple[date, int, int]]:
    """Per-day (messages, active DPNs)."""
    msgs: Counter[date] = Counter()
    dpns: dict[date, set[str]] = defaultdict(set)
    for msg in store:
        d = msg.received.instant.date()
        msgs[d] += 1
        dpns[d].add(msg.receiver.e164)
    return [(d, msgs[d], len(dpns[d])) for d in sorted(msgs)]


def country_report(store: MessageStore) -> list[tuple[str, int, int]]:
    """Per-country (DPNs, messages)."""
    dpns: dict[str, set[str]] = defaultdict(set)
    msgs: Counter[str] = Counter()
    for msg in store:
        c = country_of(msg.receiver)
        dpns[c].add(msg.receiver.e164)
        msgs[c] += 1
    return [(c, len(dpns[c]), msgs[c]) for c in sorted(dpns)]


def language_report(
    store: MessageStore, languages: dict[str, str]
) -> list[tuple[str, int, float]]:
    counts: Counter[str] = Counter()
    total = 0
    for msg in store:
        counts[languages.get(message_key(msg).hex(), "und")] += 1
        total += 1
    return [
        (lang, n, n / total) for lang, n in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    ]


def top_services_report(
    store: MessageStore, labels: dict[str, str]
) -> list[tuple[str, int, int]]:
    """Per-service (messages, DPN coverage), most messages first."""
    msgs: Counter[str] = Counter()
    dpns: dict[str, set[str]] = defaultdict(set)
    for msg in store:
        svc = labels.get(message_key(msg).hex(), "unknown")
        msgs[svc] += 1
        dpns[svc].add(msg.receiver.e164)
    return [
        (svc, msgs[svc], len(dpns[svc]))
        for svc in sorted(msgs, key=lambda s: (-msgs[s], s))
    ]


# -- CSV writers ----------------------------------------------------------


def _fmt_duration(seconds: float) -> str:
    """Explicit unit per cell, avoiding hour/day ambiguity."""
    if seconds < DAY:
        return f"{seconds / HOUR:.2f}h"
    return f"{seconds / DAY:.2f}d"


def write_lifetime_csv(rows: list[LifetimeBucket], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as out:
        w = csv.writer(out)
        w.writerow(["bucket", "mean", "q1", "q2", "q3", "dpns", "messages", "services"])
        for r in rows:
            w.writerow(
                [
                    r.bucket.value,
                    _fmt_duration(r.mean),
                    _fmt_duration(r.q1),
                    _fmt_duration(r.q2),
                    _fmt_duration(r.q3),
                    r.dpn_count,
                    r.message_count,
                    r.service_count,
                ]
            )


def write_ttfm_csv(rows: list[TtfmStats], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as out:
        w = csv.writer(out)
        w.writerow(["service", "count", "q1", "median", "q3", "share_lt_24h"])
        for r in rows:
            w.writerow(
                [
                    r.service,
                    r.count,
                    _fmt_duration(r.q1),
                    _fmt_duration(r.median),
                    _fmt_duration(r.q3),
                    f"{r.share_lt_day:.4f}",
                ]
            )


def write_burst_csv(rows: list[BurstCalendar], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as out:
        w = csv.writer(out)
        w.writerow(["dpn", "service", "burst_days"])
        for r in rows:
            w.writerow([r.dpn, r.service, " ".join(d.isoformat() for d in sorted(r.days))])


def write_volume_csv(rows: list[tuple[date, int, int]], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as out:
        w = csv.writer(out)
        w.writerow(["date", "messages", "active_dpns"])
        for d, m, n in rows:
            w.writerow([d.isoformat(), m, n])


def write_country_csv(rows: list[tuple[str, int, int]], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as out:
        w = csv.writer(out)
        w.writerow(["country", "dpns", "messages"])
        for row in rows:
            w.writerow(row)


def write_language_csv(rows: list[tuple[str, int, float]], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as out:
        w = csv.writer(out)
        w.writerow(["language", "messages", "share"])
        for lang, n, share in rows:
            w.writerow([lang, n, f"{share:.4f}"])


def write_overlap_csv(report: OverlapReport, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as out:
        w = csv.writer(out)
        w.writerow(["dpn", "gateways"])
        for e164 in sorted(report.gateway_sets):
            w.writerow([e164, " ".join(sorted(report.gateway_sets[e164]))])
        w.writerow(["__multi_gateway_share__", f"{report.multi_gateway_share:.4f}"])


def write_top_services_csv(rows: list[tuple[str, int, int]], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as out:
        w = csv.writer(out)
        w.writerow(["service", "messages", "dpns"])
        for row in rows:
            w.writerow(row)
