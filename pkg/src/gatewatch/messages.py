"""Canonical message model: phone numbers, senders, timestamps and composite keys.

Everything downstream (dedup, attribution, clustering, analytics) is keyed by
the composite :class:`MessageKey`, which deliberately excludes the gateway so
the same SMS observed on two gateways collides.
"""

from __future__ import annotations

import hashlib
import re
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum

E164_RE = re.compile(r"^\+[0-9]{6,15}$")
SHORTCODE_RE = re.compile(r"^[0-9]{3,8}$")


class SenderKind(str, Enum):
    E164 = "e164"
    SHORT_CODE = "short_code"
    SENDER_ID = "sender_id"


class Resolution(str, Enum):
    SECOND = "second"
    MINUTE = "minute"
    DAY = "day"


@dataclass(frozen=True)
class Dpn:
    """A disposable phone number in E.164 form with its calling-prefix country."""

    e164: str
    country_prefix: str
    country: str = "unknown"

    def __post_init__(self):
        if not E164_RE.match(self.e164):
            raise ValueError(f"not an E.164 number: {self.e164!r}")
        if not (1 <= len(self.country_prefix) <= 3):
            raise ValueError(f"bad country prefix: {self.country_prefix!r}")
        if not self.e164[1:].startswith(self.country_prefix):
            raise ValueError(
                f"prefix {self.country_prefix!r} does not prefix {self.e164!r}"
            )

    @classmethod
    def from_e164(cls, e164: str) -> "Dpn":
        # Late import: the calling-code table lives with the analytics data.
        from gatewatch.analytics import country_of_e164, prefix_of_e164

        prefix, country = prefix_of_e164(e164), country_of_e164(e164)
        return cls(e164=e164, country_prefix=prefix or e164[1:2], country=country)


@dataclass(frozen=True)
class SenderRef:
    kind: SenderKind
    value: str

    def __post_init__(self):
        if self.kind is SenderKind.E164 and not E164_RE.match(self.value):
            raise ValueError(f"sender not E.164: {self.value!r}")
        if self.kind is SenderKind.SHORT_CODE and not SHORTCODE_RE.match(self.value):
            raise ValueError(f"sender not a 3-8 digit short code: {self.value!r}")
        if self.kind is SenderKind.SENDER_ID and not (0 < len(self.value) <= 16):
            raise ValueError(f"sender id must be 1-16 chars: {self.value!r}")


@dataclass(frozen=True)
class RxTimestamp:
    instant: datetime
    resolution: Resolution

    def __post_init__(self):
        if self.instant.tzinfo is None:
            raise ValueError("instant must be timezone-aware UTC")
        if self.resolution is Resolution.DAY and (
            self.instant.hour or self.instant.minute or self.instant.second
            or self.instant.microsecond
        ):
            raise ValueError("day-resolution instants must be midnight UTC")


@dataclass(frozen=True)
class Message:
    receiver: Dpn
    sender: SenderRef
    received: RxTimestamp
    content: str
    gateway_id: str
    fetched_at: datetime

    def __post_init__(self):
        if not self.content:
            raise ValueError("content must be non-empty")
        if self.fetched_at.tzinfo is None:
            raise ValueError("fetched_at must be timezone-aware UTC")
        if self.received.resolution is Resolution.DAY:
            if self.fetched_at.date() < self.received.instant.date():
                raise ValueError("fetched_at precedes reception date")
        elif self.fetched_at < self.received.instant:
            raise ValueError("fetched_at precedes reception instant")


@dataclass(frozen=True)
class MessageKey:
    """Composite identity of an SMS: receiver, sender, timestamp, content digest.

    The gateway is intentionally not part of the key so cross-posted messages
    deduplicate.
    """

    receiver: str
    sender_kind: SenderKind
    sender: str
    received: datetime
    resolution: Resolution
    content_digest: str  # 128-bit hex

    def hex(self) -> str:
        head = hashlib.blake2b(
            "|".join(
                (
                    self.receiver,
                    self.sender_kind.value,
                    self.sender,
                    self.received.isoformat(),
                    self.resolution.value,
                    self.content_digest,
                )
            ).encode(),
            digest_size=16,
        )
        return head.hexdigest()


def content_digest(content: str) -> str:
    """128-bit digest over NFC-normalized content bytes."""
    data = unicodedata.normalize("NFC", content).encode("utf-8")
    return hashlib.blake2b(data, digest_size=16).hexdigest()


def message_key(msg: Message) -> MessageKey:
    return MessageKey(
        receiver=msg.receiver.e164,
        sender_kind=msg.sender.kind,
        sender=msg.sender.value,
        received=msg.received.instant,
        resolution=msg.received.resolution,
        content_digest=content_digest(msg.content),
    )


def repair_unicode(raw: bytes | str) -> str:
    """Decode raw payload bytes, replacing invalid sequences with U+FFFD."""
    if isinstance(raw, str):
        return raw
    return raw.decode("utf-8", errors="replace")


class UnparsableTimestamp(ValueError):
    def __init__(self, raw: str, attempted: list[str]):
        super().__init__(f"unparsable timestamp {raw!r}; tried: {', '.join(attempted)}")
        self.raw = raw
        self.attempted = attempted


_ORDINAL_RE = re.compile(r"\b(\d{1,2})(st|nd|rd|th)\b", re.IGNORECASE)

_RELATIVE_RE = re.compile(
    r"^\s*(\d+|an?)\s+(second|minute|hour|day|week)s?\s+ago\s*$", re.IGNORECASE
)

_RELATIVE_UNITS = {
    "second": (timedelta(seconds=1), Resolution.SECOND),
    "minute": (timedelta(minutes=1), Resolution.MINUTE),
    "hour": (timedelta(hours=1), Resolution.DAY),
    "day": (timedelta(days=1), Resolution.DAY),
    "week": (timedelta(weeks=1), Resolution.DAY),
}

# (strptime format, resolution). Tried in order after ordinal-suffix stripping.
_ABSOLUTE_FORMATS: list[tuple[str, Resolution]] = [
    ("%Y-%m-%dT%H:%M:%S", Resolution.SECOND),
    ("%Y-%m-%d %H:%M:%S", Resolution.SECOND),
    ("%Y-%m-%dT%H:%M", Resolution.MINUTE),
    ("%Y-%m-%d %H:%M", Resolution.MINUTE),
    ("%Y-%m-%d", Resolution.DAY),
    ("%d %b %Y, %I:%M:%S %p", Resolution.SECOND),
    ("%d %b %Y, %I:%M %p", Resolution.MINUTE),
    ("%d %B %Y, %I:%M %p", Resolution.MINUTE),
    ("%d %b %Y %H:%M:%S", Resolution.SECOND),
    ("%d %b %Y %H:%M", Resolution.MINUTE),
    ("%d %b %Y", Resolution.DAY),
    ("%d %B %Y", Resolution.DAY),
    ("%b %d, %Y %I:%M:%S %p", Resolution.SECOND),
    ("%b %d, %Y %I:%M %p", Resolution.MINUTE),
    ("%B %d, %Y %I:%M %p", Resolution.MINUTE),
    ("%b %d, %Y", Resolution.DAY),
    ("%B %d, %Y", Resolution.DAY),
    ("%d/%m/%Y %H:%M:%S", Resolution.SECOND),
    ("%d/%m/%Y %H:%M", Resolution.MINUTE),
    ("%d/%m/%Y", Resolution.DAY),
]


def _floor_to_day(instant: datetime) -> datetime:
    return instant.replace(hour=0, minute=0, second=0, microsecond=0)


def parse_timestamp(
    raw: str,
    gateway_tz: timezone,
    fetched_at: datetime,
    phrase_table: dict[str, timedelta] | None = None,
) -> RxTimestamp:
    """Parse a gateway-displayed timestamp into a UTC instant with resolution.

    Absolute strings are interpreted in ``gateway_tz``. Relative strings
    ("12 hours ago") are anchored at ``fetched_at``; offsets of an hour or
    coarser downgrade to day resolution since the wall-clock time is not
    recoverable. ``phrase_table`` maps extra per-gateway phrases (e.g.
    "yesterday") to offsets from ``fetched_at``, also day-resolution.
    """
    if not raw or not raw.strip():
        raise UnparsableTimestamp(raw, ["<empty>"])
    text = " ".join(raw.strip().split())
    attempted: list[str] = []

    if phrase_table:
        offset = phrase_table.get(text.lower())
        if offset is not None:
            instant = _floor_to_day((fetched_at - offset).astimezone(timezone.utc))
            return RxTimestamp(instant=instant, resolution=Resolution.DAY)
        attempted.append("phrase-table")

    m = _RELATIVE_RE.match(text)
    if m:
        count = 1 if m.group(1).lower() in ("a", "an") else int(m.group(1))
        unit, resolution = _RELATIVE_UNITS[m.group(2).lower()]
        instant = (fetched_at - count * unit).astimezone(timezone.utc)
        if resolution is Resolution.DAY:
            instant = _floor_to_day(instant)
        elif resolution is Resolution.MINUTE:
            instant = instant.replace(second=0, microsecond=0)
        else:
            instant = instant.replace(microsecond=0)
        return RxTimestamp(instant=instant, resolution=resolution)
    attempted.append("relative")

    stripped = _ORDINAL_RE.sub(r"\1", text)
    for fmt, resolution in _ABSOLUTE_FORMATS:
        try:
            naive = datetime.strptime(stripped, fmt)
        except ValueError:
            attempted.append(fmt)
            continue
        if resolution is Resolution.DAY:
            # Keep the displayed calendar date; converting a local midnight
            # through the gateway offset would shift it off the shown day.
            instant = naive.replace(tzinfo=timezone.utc)
        else:
            instant = naive.replace(tzinfo=gateway_tz).astimezone(timezone.utc)
        # Sanity clamp: a gateway clock slightly ahead must not produce a
        # reception instant later than our own fetch time.
        if resolution is Resolution.DAY:
            if instant.date() > fetched_at.date():
                instant = _floor_to_day(fetched_at.astimezone(timezone.utc))
        elif instant > fetched_at:
            instant = fetched_at.astimezone(timezone.utc).replace(microsecond=0)
        return RxTimestamp(instant=instant, resolution=resolution)

    raise UnparsableTimestamp(raw, attempted)
