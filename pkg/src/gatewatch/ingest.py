"""Gateway ingestion: PSG candidate identification, inbox adapters and the
adaptive crawl scheduler.

Hostname segmentation is a dictionary DP over each dot/hyphen-separated
label; a label with no dictionary cover comes back whole. Candidate
matching is a plain token-set intersection against a configurable keyword
list.
"""

from __future__ import annotations

import json
import math
import re
import statistics
import time
import urllib.robotparser
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from enum import Enum
from importlib import resources
from pathlib import Path

from gatewatch.messages import Dpn, Message
from gatewatch.store import decode_record

# -- hostname segmentation -------------------------------------------------


def _load_wordcosts() -> dict[str, float]:
    words = []
    with resources.files("gatewatch.data").joinpath("segment_words.txt").open(
        encoding="utf-8"
    ) as fh:
        for line in fh:
            word = line.strip().lower()
            if word and not word.startswith("#"):
                words.append(word)
    # Zipf-style cost: earlier entries are cheaper to use.
    return {w: math.log2(i + 2) for i, w in enumerate(words)}


_WORD_COSTS = _load_wordcosts()
_UNKNOWN_BASE = 40.0  # any dictionary cover beats an unknown chunk
_MAX_WORD_LEN = max(len(w) for w in _WORD_COSTS)

_ALPHA_NUM_SPLIT = re.compile(r"[0-9]+|[a-z]+")


def _segment_chunk(chunk: str) -> list[str]:
    """Min-cost dictionary segmentation of a lowercase alphabetic chunk."""
    n = len(chunk)
    best: list[float] = [0.0] + [math.inf] * n
    back: list[tuple[int, str]] = [(0, "")] * (n + 1)
    for i in range(1, n + 1):
        lo = max(0, i - max(_MAX_WORD_LEN, n))
        for j in range(lo, i):
            piece = chunk[j:i]
            cost = _WORD_COSTS.get(piece)
            if cost is None:
                # Unknown pieces are allowed but expensive, and splitting an
                # unknown region never pays off (cost grows per piece).
                cost = _UNKNOWN_BASE + len(piece)
            if best[j] + cost < best[i]:
                best[i] = best[j] + cost
                back[i] = (j, piece)
    tokens: list[str] = []
    i = n
    while i > 0:
        j, piece = back[i]
        tokens.append(piece)
        i = j
    return list(reversed(tokens))


def segment_hostname(host: str) -> list[str]:
    """Lowercase word tokens from a registrable hostname, TLD dropped."""
    labels = host.strip().lower().rstrip(".").split(".")
    if len(labels) > 1:
        labels = labels[:-1]  # drop the public-suffix label
    tokens: list[str] = []
    for label in labels:
        for part in label.split("-"):
            for chunk in _ALPHA_NUM_SPLIT.findall(part):
                if chunk.isdigit():
                    tokens.append(chunk)
                else:
                    tokens.extend(_segment_chunk(chunk))
    return tokens


def default_psg_keywords() -> frozenset[str]:
    words = []
    with resources.files("gatewatch.data").joinpath("psg_keywords.txt").open(
        encoding="utf-8"
    ) as fh:
        for line in fh:
            word = line.strip().lower()
            if word and not word.startswith("#"):
                words.append(word)
    return frozenset(words)


_DEFAULT_KEYWORDS = default_psg_keywords()


def match_psg_keywords(
    tokens: list[str], keywords: frozenset[str] | None = None
) -> bool:
    kws = _DEFAULT_KEYWORDS if keywords is None else keywords
    return not kws.isdisjoint(tokens)


def is_psg_candidate(host: str, keywords: frozenset[str] | None = None) -> bool:
    return match_psg_keywords(segment_hostname(host), keywords)


# -- gateway configuration -------------------------------------------------


class AdapterKind(str, Enum):
    FIXTURE = "fixture"
    HTTP_LIST = "http_list"


@dataclass(frozen=True)
class GatewayConfig:
    id: str
    adapter: AdapterKind
    endpoint: str  # URL or fixture directory path
    inbox_capacity: int | None = None  # None = unbounded
    min_period: timedelta = timedelta(minutes=1)
    max_period: timedelta = timedelta(hours=6)
    tz_offset_minutes: int = 0
    extraction_recipe: dict | None = None  # HttpList only

    def __post_init__(self):
        if self.min_period > self.max_period:
            raise ValueError("min_period must be <= max_period")
        if self.inbox_capacity is not None and self.inbox_capacity < 1:
            raise ValueError("inbox_capacity must be >= 1 when bounded")


def load_gateway_configs(path: str | Path) -> list[GatewayConfig]:
    """Gateway config file: YAML list of gateway entries (see README)."""
    import yaml

    with Path(path).open(encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or []
    configs = []
    for entry in raw:
        capacity = entry.get("inbox_capacity", "unbounded")
        configs.append(
            GatewayConfig(
                id=entry["id"],
                adapter=AdapterKind(entry.get("adapter", "fixture")),
                endpoint=str(entry["endpoint"]),
                inbox_capacity=None if capacity == "unbounded" else int(capacity),
                min_period=timedelta(seconds=entry.get("min_period_s", 60)),
                max_period=timedelta(seconds=entry.get("max_period_s", 21600)),
                tz_offset_minutes=int(entry.get("tz_offset_minutes", 0)),
                extraction_recipe=entry.get("extraction_recipe"),
            )
        )
    return configs


@dataclass(frozen=True)
class InboxSnapshot:
    dpn: Dpn
    messages: tuple[Message, ...]  # newest first
    fetched_at: datetime

    def __post_init__(self):
        instants = [m.received.instant for m in self.messages]
        if any(a < b for a, b in zip(instants, instants[1:])):
            raise ValueError("snapshot messages must be newest-first")


class NetworkError(RuntimeError):
    """Transient fetch failure; the caller may retry."""


class ParseError(RuntimeError):
    def __init__(self, page: str, reason: str):
        super().__init__(f"cannot parse {page}: {reason}")
        self.page = page
        self.reason = reason


class UnknownDpn(KeyError):
    pass


class FixtureAdapter:
    """Reads fixtures/<gateway_id>/<e164>.jsonl message records bit-exactly."""

    def __init__(self, cfg: GatewayConfig, fixtures_root: str | Path | None = None):
        self.cfg = cfg
        root = Path(fixtures_root) if fixtures_root else Path(cfg.endpoint).parent
        self.dir = root / cfg.id

    def list_dpns(self) -> list[str]:
        if not self.dir.is_dir():
            return []
        return sorted(p.stem for p in self.dir.glob("*.jsonl"))

    def fetch_inbox(self, dpn: Dpn, now: datetime | None = None) -> InboxSnapshot:
        path = self.dir / f"{dpn.e164}.jsonl"
        if not path.exists():
            raise UnknownDpn(dpn.e164)
        messages = []
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            try:
                messages.append(decode_record(line))
            except (ValueError, KeyError) as exc:
                raise ParseError(str(path), f"line {lineno}: {exc}") from exc
        messages.sort(key=lambda m: m.received.instant, reverse=True)
        if self.cfg.inbox_capacity is not None:
            messages = messages[: self.cfg.inbox_capacity]
        fetched = now or datetime.now(timezone.utc)
        return InboxSnapshot(dpn=dpn, messages=tuple(messages), fetched_at=fetched)


class HttpListAdapter:
    """Generic HTTP-page adapter driven by a per-gateway extraction recipe.

    The recipe is configuration, not code: a regex with named groups
    ``sender``, ``timestamp`` and ``content`` applied over the inbox page at
    ``endpoint`` (with ``{dpn}`` substituted). Requests respect robots.txt
    and keep >= 1 s between hits on the same host.
    """

    MIN_HOST_INTERVAL = 1.0

    def __init__(self, cfg: GatewayConfig, http_get=None):
        if not cfg.extraction_recipe or "pattern" not in cfg.extraction_recipe:
            raise ValueError(f"gateway {cfg.id}: http_list needs an extraction_recipe")
        self.cfg = cfg
        self.pattern = re.compile(cfg.extraction_recipe["pattern"], re.DOTALL)
        self._http_get = http_get or self._default_get
        self._last_hit: dict[str, float] = {}
        self._robots: dict[str, urllib.robotparser.RobotFileParser] = {}

    @staticmethod
    def _default_get(url: str) -> str:
        import requests

        try:
            resp = requests.get(url, timeout=30)
            resp.raise_for_status()
        except requests.RequestException as exc:
            raise NetworkError(str(exc)) from exc
        return resp.text

    def _host(self, url: str) -> str:
        return re.sub(r"^[a-z]+://", "", url).split("/")[0]

    def _polite_wait(self, host: str) -> None:
        last = self._last_hit.get(host)
        if last is not None:
            elapsed = time.monotonic() - last
            if elapsed < self.MIN_HOST_INTERVAL:
                time.sleep(self.MIN_HOST_INTERVAL - elapsed)
        self._last_hit[host] = time.monotonic()

    def _allowed(self, url: str) -> bool:
        host = self._host(url)
        rp = self._robots.get(host)
        if rp is None:
            rp = urllib.robotparser.RobotFileParser(f"https://{host}/robots.txt")
            try:
                rp.read()
            except OSError:
                rp.allow_all = True
            self._robots[host] = rp
        return rp.can_fetch("gatewatch", url)

    def fetch_inbox(self, dpn: Dpn, now: datetime | None = None) -> InboxSnapshot:
        from gatewatch.messages import (
            RxTimestamp,
            SenderKind,
            SenderRef,
            parse_timestamp,
        )

        url = self.cfg.endpoint.format(dpn=dpn.e164.lstrip("+"))
        if not self._allowed(url):
            raise NetworkError(f"robots.txt disallows {url}")
        self._polite_wait(self._host(url))
        page = self._http_get(url)
        fetched = now or datetime.now(timezone.utc)
        tz = timezone(timedelta(minutes=self.cfg.tz_offset_minutes))
        messages = []
        for m in self.pattern.finditer(page):
            sender_raw = m.group("sender").strip()
            if re.fullmatch(r"\+[0-9]{6,15}", sender_raw):
                sender = SenderRef(SenderKind.E164, sender_raw)
            elif re.fullmatch(r"[0-9]{3,8}", sender_raw):
                sender = SenderRef(SenderKind.SHORT_CODE, sender_raw)
            else:
                sender = SenderRef(SenderKind.SENDER_ID, sender_raw[:16])
            messages.append(
                Message(
                    receiver=dpn,
                    sender=sender,
                    received=parse_timestamp(m.group("timestamp"), tz, fetched),
                    content=m.group("content").strip(),
                    gateway_id=self.cfg.id,
                    fetched_at=fetched,
                )
            )
        if not messages and not self.pattern.search(page):
            raise ParseError(url, "extraction recipe matched nothing")
        messages.sort(key=lambda m: m.received.instant, reverse=True)
        if self.cfg.inbox_capacity is not None:
            messages = messages[: self.cfg.inbox_capacity]
        return InboxSnapshot(dpn=dpn, messages=tuple(messages), fetched_at=fetched)


def make_adapter(cfg: GatewayConfig, fixtures_root: str | Path | None = None):
    if cfg.adapter is AdapterKind.FIXTURE:
        return FixtureAdapter(cfg, fixtures_root)
    return HttpListAdapter(cfg)


# -- adaptive scheduling ---------------------------------------------------


@dataclass(frozen=True)
class CrawlPlan:
    gateway_id: str
    dpn: str
    next_fetch_at: datetime
    current_period: timedelta


DEFAULT_SAFETY_FACTOR = 0.5  # target ~2x oversampling of inbox turnover


def schedule_next(
    plan: CrawlPlan,
    cfg: GatewayConfig,
    snapshot: InboxSnapshot,
    prev: InboxSnapshot | None = None,
    safety_factor: float = DEFAULT_SAFETY_FACTOR,
) -> CrawlPlan:
    """Adapt the per-inbox crawl period from the observed inbox span.

    period = clamp(safety * (fetched_at - oldest message) / capacity).
    Unbounded inboxes cannot lose messages, so they run at max_period. A
    message visible in ``prev`` but missing from the part of ``snapshot``
    that covers its time range signals possible loss: halve the period.
    """
    from gatewatch.messages import message_key

    if cfg.inbox_capacity is None:
        period = cfg.max_period
    elif snapshot.messages:
        span = snapshot.fetched_at - snapshot.messages[-1].received.instant
        raw = span * safety_factor / cfg.inbox_capacity
        period = min(max(raw, cfg.min_period), cfg.max_period)
    else:
        period = plan.current_period

    if prev is not None and snapshot.messages:
        window_start = snapshot.messages[-1].received.instant
        seen = {message_key(m) for m in snapshot.messages}
        lost = any(
            m.received.instant >= window_start and message_key(m) not in seen
            for m in prev.messages
        )
        if lost:
            period = max(period / 2, cfg.min_period)

    return replace(
        plan,
        next_fetch_at=snapshot.fetched_at + period,
        current_period=period,
    )


# -- aggregator flagging ---------------------------------------------------


@dataclass
class AggregatorFlag:
    gateway_id: str
    duplicate_share: float
    median_lag_seconds: float


def aggregator_report(
    observations: list[tuple[str, str, datetime]], dup_threshold: float = 0.5
) -> list[AggregatorFlag]:
    """Flag gateways republishing other gateways' messages for human review.

    ``observations``: (gateway_id, key_hex, fetched_at) in collection order.
    A gateway is flagged when >= ``dup_threshold`` of its messages were
    already seen on another gateway, with positive median lag.
    """
    first_seen: dict[str, tuple[str, datetime]] = {}
    per_gateway_total: dict[str, int] = {}
    per_gateway_lags: dict[str, list[float]] = {}
    for gateway, khex, fetched_at in observations:
        per_gateway_total[gateway] = per_gateway_total.get(gateway, 0) + 1
        if khex in first_seen and first_seen[khex][0] != gateway:
            lag = (fetched_at - first_seen[khex][1]).total_seconds()
            per_gateway_lags.setdefault(gateway, []).append(lag)
        else:
            first_seen.setdefault(khex, (gateway, fetched_at))
    flags = []
    for gateway in sorted(per_gateway_total):
        lags = per_gateway_lags.get(gateway, [])
        share = len(lags) / per_gateway_total[gateway]
        if lags and share >= dup_threshold:
            median_lag = statistics.median(lags)
            if median_lag > 0:
                flags.append(AggregatorFlag(gateway, share, median_lag))
    return flags
