"""Per-message artifact extraction: OTP codes, single-use links, URL
expansion through redirect headers, and pluggable URL reputation checks.

OTP candidates come from the same identifier battery the clustering stage
uses, so a digit run inside an IBAN, timestamp or URL can never be reported
as a code.
"""

from __future__ import annotations

import json
import os
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence
from urllib.parse import urlparse

from gatewatch.purpose import IdentifierKind, detect_identifiers, _URL_RE

OTP_MIN_DIGITS = 4
OTP_MAX_DIGITS = 6
LINK_TOKEN_MIN_CHARS = 8

VERIFICATION_LINK_PHRASES = (
    "click to verify",
    "click to confirm",
    "confirm your",
    "verify your",
    "activate your",
    "tap to verify",
)


class SingleUseClass(str, Enum):
    OTP_ONLY = "otp_only"
    LINK_ONLY = "link_only"
    BOTH = "both"
    NEITHER = "neither"


@dataclass(frozen=True)
class ExtractionResult:
    otps: tuple[str, ...]
    single_use_links: tuple[str, ...]
    other_urls: tuple[str, ...]
    single_use_class: SingleUseClass


def find_otps(text: str) -> list[str]:
    """Digit groups totalling 4-6 digits, optionally split once by a dash or
    space. Output codes have the separator removed. Runs claimed by an IBAN,
    URL, email, IP or timestamp pattern, longer digit runs, and E.164-style
    numbers (leading "+") are excluded."""
    codes = []
    for hit in detect_identifiers(text):
        if hit.kind is not IdentifierKind.NUMERIC:
            continue
        span = text[hit.start : hit.end]
        if hit.start > 0 and text[hit.start - 1] == "+":
            continue  # phone number
        groups = re.split(r"[ -]", span)
        if len(groups) > 2:
            continue  # longer separated chains are phone-like, not codes
        digits = "".join(groups)
        if OTP_MIN_DIGITS <= len(digits) <= OTP_MAX_DIGITS:
            codes.append(digits)
    return codes


def _url_token_component(url: str, min_chars: int) -> bool:
    parsed = urlparse(url if "://" in url else f"http://{url}")
    components = [seg for seg in parsed.path.split("/") if seg]
    components.extend(re.split(r"[&=]", parsed.query))
    for comp in components:
        if (
            len(comp) >= min_chars
            and comp.isalnum()
            and any(c.isalpha() for c in comp)
            and any(c.isdigit() for c in comp)
        ):
            return True
    return False


def find_urls(text: str) -> list[str]:
    urls = []
    for m in _URL_RE.finditer(text):
        url = m.group()
        while url and url[-1] in ".,;:!?)]}'\"":
            url = url[:-1]
        urls.append(url)
    return urls


def find_single_use_links(
    text: str,
    token_min_chars: int = LINK_TOKEN_MIN_CHARS,
    context_phrases: Sequence[str] = VERIFICATION_LINK_PHRASES,
) -> list[str]:
    """URLs carrying a token-like path/query component, or any URL in a
    verification-phrase context."""
    urls = find_urls(text)
    if not urls:
        return []
    lowered = text.lower()
    context = any(phrase in lowered for phrase in context_phrases)
    return [
        url for url in urls if context or _url_token_component(url, token_min_chars)
    ]


def extract(text: str) -> ExtractionResult:
    otps = tuple(find_otps(text))
    single_use = tuple(find_single_use_links(text))
    others = tuple(u for u in find_urls(text) if u not in single_use)
    if otps and single_use:
        cls = SingleUseClass.BOTH
    elif otps:
        cls = SingleUseClass.OTP_ONLY
    elif single_use:
        cls = SingleUseClass.LINK_ONLY
    else:
        cls = SingleUseClass.NEITHER
    return ExtractionResult(otps, single_use, others, cls)


def classify_single_use(text: str) -> SingleUseClass:
    return extract(text).single_use_class


# -- URL expansion ---------------------------------------------------------


class ExpansionStatus(str, Enum):
    EXPANDED = "expanded"
    NOT_SHORTENER = "not_shortener"
    TOO_MANY_HOPS = "too_many_hops"
    NETWORK_ERROR = "network_error"


@dataclass(frozen=True)
class ExpansionOutcome:
    original: str
    final: str
    hops: int
    status: ExpansionStatus


# transport(url) -> (status_code, headers). Must not read the response body.
Transport = Callable[[str], tuple[int, dict[str, str]]]

MAX_HOPS = 5


def load_shortener_domains(path: str | Path | None = None) -> frozenset[str]:
    if path is None:
        text = (
            resources.files("gatewatch.data")
            .joinpath("url_shorteners.txt")
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(
        line.strip().lower() for line in text.splitlines() if line.strip()
    )


def _host_of(url: str) -> str:
    return urlparse(url if "://" in url else f"http://{url}").netloc.lower()


def head_transport(url: str) -> tuple[int, dict[str, str]]:
    """Issue a redirect-following-disabled HEAD request; never touches the body."""
    import requests

    resp = requests.head(url, allow_redirects=False, timeout=15)
    return resp.status_code, {k.lower(): v for k, v in resp.headers.items()}


def expand_url(
    url: str,
    shortener_domains: frozenset[str],
    transport: Transport = head_transport,
    max_hops: int = MAX_HOPS,
) -> ExpansionOutcome:
    """Follow ``Location`` headers from a known shortener, body never read."""
    if _host_of(url) not in shortener_domains:
        return ExpansionOutcome(url, url, 0, ExpansionStatus.NOT_SHORTENER)
    current = url
    hops = 0
    while True:
        try:
            status, headers = transport(current)
        except Exception:
            return ExpansionOutcome(url, current, hops, ExpansionStatus.NETWORK_ERROR)
        location = headers.get("location")
        if not (300 <= status < 400 and location):
            return ExpansionOutcome(url, current, hops, ExpansionStatus.EXPANDED)
        if hops >= max_hops:
            return ExpansionOutcome(url, current, hops, ExpansionStatus.TOO_MANY_HOPS)
        current = location
        hops += 1


def expand_many(
    urls: Iterable[str],
    shortener_domains: frozenset[str],
    transport: Transport = head_transport,
    max_hops: int = MAX_HOPS,
    max_in_flight: int = 8,
) -> list[ExpansionOutcome]:
    """Concurrent expansion with per-host serialization."""
    urls = list(urls)
    host_locks: dict[str, threading.Lock] = {}
    guard = threading.Lock()

    def locked_transport(url: str):
        host = _host_of(url)
        with guard:
            lock = host_locks.setdefault(host, threading.Lock())
        with lock:
            return transport(url)

    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(
            pool.map(
                lambda u: expand_url(u, shortener_domains, locked_transport, max_hops),
                urls,
            )
        )


# -- reputation ------------------------------------------------------------


class Verdict(str, Enum):
    CLEAN = "clean"
    SOCIAL_ENGINEERING = "social_engineering"
    MALWARE = "malware"
    SPAM = "spam"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ReputationVerdict:
    url: str
    verdict: Verdict
    reason: str | None = None  # set only for UNKNOWN


class ReputationClient(Protocol):
    def lookup(self, urls: Sequence[str]) -> list[ReputationVerdict]: ...


_CATEGORY_MAP = {
    "phishing": Verdict.SOCIAL_ENGINEERING,
    "social_engineering": Verdict.SOCIAL_ENGINEERING,
    "malware": Verdict.MALWARE,
    "spam": Verdict.SPAM,
}


class OfflineBlocklistClient:
    """Blocklist file: one "<url> <category>" per line; unlisted is clean."""

    def __init__(self, path: str | Path):
        self.listed: dict[str, Verdict] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            url, _, category = line.partition(" ")
            self.listed[url] = _CATEGORY_MAP.get(category.strip(), Verdict.SPAM)

    def lookup(self, urls: Sequence[str]) -> list[ReputationVerdict]:
        return [
            ReputationVerdict(u, self.listed.get(u, Verdict.CLEAN)) for u in urls
        ]


REPUTATION_KEY_ENV = "GATEWATCH_REPUTATION_KEY"


class RemoteReputationClient:
    """Generic HTTP lookup: POST {"urls": [...]} -> {"verdicts": {url: category}}.

    The API key comes from the GATEWATCH_REPUTATION_KEY environment variable.
    """

    def __init__(self, endpoint: str, timeout: float = 15.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self.api_key = os.environ.get(REPUTATION_KEY_ENV, "")

    def lookup(self, urls: Sequence[str]) -> list[ReputationVerdict]:
        import requests

        try:
            resp = requests.post(
                self.endpoint,
                json={"urls": list(urls)},
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            verdicts = resp.json().get("verdicts", {})
        except Exception as exc:
            return [
                ReputationVerdict(u, Verdict.UNKNOWN, reason=str(exc)) for u in urls
            ]
        return [
            ReputationVerdict(
                u, _CATEGORY_MAP.get(verdicts.get(u, "clean"), Verdict.CLEAN)
            )
            for u in urls
        ]


def check_reputation(
    urls: Sequence[str], client: ReputationClient, batch_size: int = 500
) -> list[ReputationVerdict]:
    out: list[ReputationVerdict] = []
    for i in range(0, len(urls), batch_size):
        batch = urls[i : i + batch_size]
        try:
            out.extend(client.lookup(batch))
        except Exception as exc:
            out.extend(
                ReputationVerdict(u, Verdict.UNKNOWN, reason=str(exc)) for u in batch
            )
    return out
