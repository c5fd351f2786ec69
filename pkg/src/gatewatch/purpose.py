"""Hierarchical divisive clustering of messages into purpose-labeled templates.

Per service: detect structured identifiers (IBAN, URL, email, IP, numeric
code, timestamp), replace each with a typed length placeholder like
``NUMERIC{4}``, bucket messages by their dominant identifier pattern, then
near-duplicate cluster inside each bucket with 64-bit SimHash fingerprints
under a Hamming-distance threshold. Clusters get one of five
account-lifecycle purposes via token patterns induced from labeled
exemplars.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence


class IdentifierKind(str, Enum):
    # Declaration order is the priority order (IBAN highest).
    IBAN = "IBAN"
    URL = "URL"
    EMAIL = "EMAIL"
    IP = "IP"
    NUMERIC = "NUMERIC"
    TIMESTAMP = "TIMESTAMP"


_KIND_PRIORITY = {kind: i for i, kind in enumerate(IdentifierKind)}


@dataclass(frozen=True)
class IdentifierHit:
    kind: IdentifierKind
    start: int
    end: int  # [start, end) character offsets

    @property
    def length(self) -> int:
        return self.end - self.start

    @property
    def pattern(self) -> str:
        return f"{self.kind.value}{{{self.length}}}"


_IBAN_RE = re.compile(r"\b[A-Z]{2}[0-9]{2}(?:[ -]?[A-Z0-9]{1,4}){2,8}\b")
_URL_RE = re.compile(r"(?:https?://|www\.)[^\s<>\"']+", re.IGNORECASE)
_EMAIL_RE = re.compile(r"\b[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}\b")
_IP_RE = re.compile(r"(?<![\d.])(?:\d{1,3}\.){3}\d{1,3}(?![\d.])")
_NUMERIC_RE = re.compile(r"(?<![\d])\d+(?:[ -]\d+)*(?![\d])")
_TIMESTAMP_RES = [
    re.compile(r"\b\d{4}-\d{2}-\d{2}(?:[T ]\d{2}:\d{2}(?::\d{2})?)?\b"),
    re.compile(r"\b\d{1,2}/\d{1,2}/\d{2,4}\b"),
    re.compile(r"\b\d{1,2}:\d{2}(?::\d{2})?\b"),
]

NUMERIC_MIN_DIGITS = 3  # shorter runs are ordinary numbers, not codes


def iban_mod97_ok(candidate: str) -> bool:
    compact = re.sub(r"[ -]", "", candidate).upper()
    if not (15 <= len(compact) <= 34):
        return False
    rearranged = compact[4:] + compact[:4]
    digits = "".join(
        str(int(ch, 36)) if ch.isalpha() else ch for ch in rearranged
    )
    return int(digits) % 97 == 1


def _candidates(text: str) -> list[IdentifierHit]:
    hits: list[IdentifierHit] = []
    for m in _IBAN_RE.finditer(text):
        if iban_mod97_ok(m.group()):
            hits.append(IdentifierHit(IdentifierKind.IBAN, m.start(), m.end()))
    for m in _URL_RE.finditer(text):
        end = m.end()
        while end > m.start() and text[end - 1] in ".,;:!?)]}'\"":
            end -= 1
        hits.append(IdentifierHit(IdentifierKind.URL, m.start(), end))
    for m in _EMAIL_RE.finditer(text):
        hits.append(IdentifierHit(IdentifierKind.EMAIL, m.start(), m.end()))
    for m in _IP_RE.finditer(text):
        if all(int(octet) <= 255 for octet in m.group().split(".")):
            hits.append(IdentifierHit(IdentifierKind.IP, m.start(), m.end()))
    for pattern in _TIMESTAMP_RES:
        for m in pattern.finditer(text):
            hits.append(IdentifierHit(IdentifierKind.TIMESTAMP, m.start(), m.end()))
    for m in _NUMERIC_RE.finditer(text):
        digits = sum(ch.isdigit() for ch in m.group())
        if digits >= NUMERIC_MIN_DIGITS:
            hits.append(IdentifierHit(IdentifierKind.NUMERIC, m.start(), m.end()))
    return hits


def detect_identifiers(text: str) -> list[IdentifierHit]:
    """Non-overlapping identifier spans; longest match wins, then kind
    priority, then leftmost."""
    candidates = sorted(
        _candidates(text),
        key=lambda h: (-h.length, _KIND_PRIORITY[h.kind], h.start),
    )
    chosen: list[IdentifierHit] = []
    for hit in candidates:
        if all(hit.end <= c.start or hit.start >= c.end for c in chosen):
            chosen.append(hit)
    return sorted(chosen, key=lambda h: h.start)


@dataclass(frozen=True)
class TemplatedText:
    text: str
    hits: tuple[IdentifierHit, ...]


_PLACEHOLDER_RE = re.compile(
    r"(?:IBAN|URL|EMAIL|IP|NUMERIC|TIMESTAMP)\{\d+\}"
)


def template(text: str) -> TemplatedText:
    """Replace each identifier with ``KIND{length}``; fixed point on re-run."""
    if _PLACEHOLDER_RE.search(text):
        # Already templated: replacing again would corrupt the placeholders.
        return TemplatedText(text=text, hits=())
    hits = detect_identifiers(text)
    out = []
    cursor = 0
    for hit in hits:
        out.append(text[cursor : hit.start])
        out.append(hit.pattern)
        cursor = hit.end
    out.append(text[cursor:])
    return TemplatedText(text="".join(out), hits=tuple(hits))


def primary_identifier(hits: Iterable[IdentifierHit]) -> str | None:
    """Dominant identifier pattern: best kind priority, then longest."""
    best = None
    for hit in hits:
        key = (_KIND_PRIORITY[hit.kind], -hit.length)
        if best is None or key < best[0]:
            best = (key, hit)
    return best[1].pattern if best else None


# -- token normalization ---------------------------------------------------


def _load_stopwords() -> dict[str, frozenset[str]]:
    with resources.files("gatewatch.data").joinpath("stopwords.json").open(
        encoding="utf-8"
    ) as fh:
        return {lang: frozenset(words) for lang, words in json.load(fh).items()}


_STOPWORDS = _load_stopwords()
_ALL_STOPWORDS = frozenset().union(*_STOPWORDS.values())

# Light suffix stripper per language; identity for anything not listed.
_SUFFIXES: dict[str, tuple[str, ...]] = {
    "eng": ("ations", "ation", "ings", "ing", "ies", "ied", "ers", "ed", "es", "ion", "s"),
    "spa": ("aciones", "acion", "ciones", "cion", "mente", "ando", "iendo", "ado", "ida", "es", "s"),
    "por": ("ações", "ação", "mente", "ando", "endo", "ado", "ida", "es", "s"),
    "fra": ("ations", "ation", "ement", "ant", "ez", "er", "es", "s"),
    "ind": ("kan", "nya", "lah", "an"),
    "rus": ("ение", "ация", "ть", "ите", "ет", "ы", "и", "а"),
}

_MIN_STEM = 4


def stem(token: str, lang: str = "eng") -> str:
    suffixes = _SUFFIXES.get(lang)
    if not suffixes:
        return token
    for suffix in suffixes:
        if token.endswith(suffix) and len(token) - len(suffix) >= _MIN_STEM:
            return token[: -len(suffix)]
    return token


_TOKEN_SPLIT_RE = re.compile(r"\s+")
_EDGE_PUNCT_RE = re.compile(r"^\W+|\W+$", re.UNICODE)


def templated_normalized(text: str) -> str:
    """Templated text, casefolded and punctuation-stripped outside the
    placeholders: "Your Code is 0000" -> "your code NUMERIC{4}"."""
    templated = template(text).text
    out = []
    cursor = 0
    for m in _PLACEHOLDER_RE.finditer(templated):
        out.append(_normalize_plain(templated[cursor : m.start()]))
        out.append(f" {m.group()} ")
        cursor = m.end()
    out.append(_normalize_plain(templated[cursor:]))
    return _TOKEN_SPLIT_RE.sub(" ", "".join(out)).strip()


def _normalize_plain(chunk: str) -> str:
    from gatewatch.langid import normalize_text

    return normalize_text(chunk)


def normalized_tokens(text: str, lang: str = "eng") -> tuple[str, ...]:
    """Stems for clustering: stopwords and sub-2-char tokens dropped,
    identifier placeholders kept verbatim."""
    stopwords = _STOPWORDS.get(lang, _ALL_STOPWORDS)
    tokens: list[str] = []
    for tok in templated_normalized(text).split(" "):
        if _PLACEHOLDER_RE.fullmatch(tok):
            tokens.append(tok)
            continue
        tok = _EDGE_PUNCT_RE.sub("", tok)
        if len(tok) < 2 or tok in stopwords:
            continue
        tokens.append(stem(tok, lang))
    return tuple(tokens)


# -- SimHash ---------------------------------------------------------------


def _token_hash(token: str) -> int:
    # Pinned fingerprint function: blake2b-64 over the UTF-8 token.
    return int.from_bytes(
        hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "big"
    )


def simhash64(tokens: Sequence[str]) -> int:
    """Classic unweighted sign-accumulation SimHash; empty input -> 0."""
    if not tokens:
        return 0
    acc = [0] * 64
    for token in set(tokens):
        h = _token_hash(token)
        for bit in range(64):
            acc[bit] += 1 if (h >> bit) & 1 else -1
    fingerprint = 0
    for bit in range(64):
        if acc[bit] > 0:
            fingerprint |= 1 << bit
    return fingerprint


def hamming(a: int, b: int) -> int:
    return (a ^ b).bit_count()


# -- clustering ------------------------------------------------------------


class Purpose(str, Enum):
    CREATION = "creation"
    VERIFICATION = "verification"
    ACTIVITY = "activity"
    UPDATE = "update"
    RECOVERY = "recovery"
    UNLABELED = "unlabeled"


@dataclass
class TemplateCluster:
    id: int
    service: str
    bucket: str  # dominant identifier pattern, "" when none
    fingerprints: set[int] = field(default_factory=set)
    exemplar: tuple[str, ...] = ()
    exemplar_count: int = 0
    purpose: Purpose = Purpose.UNLABELED
    member_count: int = 0
    members: list[str] = field(default_factory=list)  # message ids

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "service": self.service,
            "bucket": self.bucket,
            "exemplar": " ".join(self.exemplar),
            "exemplar_count": self.exemplar_count,
            "purpose": self.purpose.value,
            "member_count": self.member_count,
            "members": self.members,
        }


SIMHASH_THRESHOLD = 10  # bits, with 64-bit fingerprints


def cluster(
    messages: Iterable[tuple[str, str]],
    service: str,
    threshold: int = SIMHASH_THRESHOLD,
    lang: str = "eng",
) -> list[TemplateCluster]:
    """First-fit SimHash clustering of one service's (message id, text) pairs.

    Messages are canonicalized by id so results are order-independent.
    Within each dominant-identifier bucket, a message joins the earliest
    cluster holding any fingerprint within ``threshold`` Hamming bits, else
    starts a new cluster. Exemplar is the most frequent normalized form.
    """
    ordered = sorted(messages, key=lambda kv: kv[0])
    clusters: list[TemplateCluster] = []
    per_bucket: dict[str, list[TemplateCluster]] = {}
    forms: dict[int, Counter[tuple[str, ...]]] = {}

    for msg_id, text in ordered:
        hits = template(text).hits
        bucket = primary_identifier(hits) or ""
        tokens = normalized_tokens(text, lang)
        fp = simhash64(tokens)
        target = None
        for cand in per_bucket.get(bucket, ()):
            if any(hamming(fp, existing) <= threshold for existing in cand.fingerprints):
                target = cand
                break
        if target is None:
            target = TemplateCluster(id=len(clusters), service=service, bucket=bucket)
            clusters.append(target)
            per_bucket.setdefault(bucket, []).append(target)
            forms[target.id] = Counter()
        target.fingerprints.add(fp)
        target.members.append(msg_id)
        target.member_count += 1
        forms[target.id][tokens] += 1

    for c in clusters:
        exemplar, count = sorted(
            forms[c.id].items(), key=lambda kv: (-kv[1], kv[0])
        )[0]
        c.exemplar = exemplar
        c.exemplar_count = count
    return clusters


# -- purpose patterns ------------------------------------------------------


@dataclass(frozen=True)
class PurposePattern:
    purpose: Purpose
    stems: tuple[str, ...]  # "*" matches any single token

    def matches(self, tokens: Sequence[str]) -> bool:
        """In-order subsequence match; a pattern stem matches a token by
        prefix, "*" matches any token."""
        it = iter(tokens)
        for pat in self.stems:
            for tok in it:
                if pat == "*" or tok.startswith(pat):
                    break
            else:
                return False
        return True

    @property
    def specificity(self) -> tuple[int, int]:
        literal = [s for s in self.stems if s != "*"]
        return (len(literal), sum(len(s) for s in literal))


def load_purpose_patterns(path: str | Path | None = None) -> list[PurposePattern]:
    if path is None:
        fh = resources.files("gatewatch.data").joinpath("purpose_patterns.json").open(
            encoding="utf-8"
        )
    else:
        fh = Path(path).open(encoding="utf-8")
    with fh:
        raw = json.load(fh)
    patterns = [
        PurposePattern(Purpose(r["purpose"]), tuple(r["stems"])) for r in raw
    ]
    # More literal stems first; file order breaks remaining ties.
    order = sorted(
        range(len(patterns)),
        key=lambda i: (-patterns[i].specificity[0], -patterns[i].specificity[1], i),
    )
    return [patterns[i] for i in order]


def save_purpose_patterns(patterns: Iterable[PurposePattern], path: str | Path) -> None:
    rows = [
        {"purpose": p.purpose.value, "stems": list(p.stems)} for p in patterns
    ]
    Path(path).write_text(
        json.dumps(rows, ensure_ascii=False, indent=1) + "\n", encoding="utf-8"
    )


def label_cluster(
    cluster_: TemplateCluster, patterns: Sequence[PurposePattern]
) -> Purpose:
    for pattern in patterns:
        if pattern.matches(cluster_.exemplar):
            return pattern.purpose
    return Purpose.UNLABELED
