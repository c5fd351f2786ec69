"""Keyword-rule service attribution.

Message text is normalized (casefold, NFD with combining marks removed,
punctuation stripped) and tokenized on whitespace; rules match unigrams or
adjacent bigrams on word boundaries. Exclude-grams veto a rule. Among
matching rules the winner is the highest priority, then the longest matched
gram, then the lexicographically smallest service, so rule-file order never
matters.
"""

from __future__ import annotations

import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable


def strip_diacritics(text: str) -> str:
    decomposed = unicodedata.normalize("NFD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


_NON_WORD_RE = re.compile(r"[^\w]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase, diacritic-free whitespace tokens."""
    cleaned = _NON_WORD_RE.sub(" ", strip_diacritics(text.casefold()))
    return cleaned.split()


@dataclass(frozen=True)
class KeywordCandidate:
    gram: str
    frequency: int


def extract_keywords(corpus: Iterable[str], top_k: int) -> list[KeywordCandidate]:
    """Most frequent unigrams and adjacent bigrams, ties broken lexically."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    counts: Counter[str] = Counter()
    for text in corpus:
        tokens = tokenize(text)
        counts.update(tokens)
        counts.update(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [KeywordCandidate(g, n) for g, n in ranked[:top_k]]


@dataclass(frozen=True)
class ServiceRule:
    service: str
    category: str
    include: tuple[str, ...]
    exclude: tuple[str, ...] = ()
    priority: int = 0

    def __post_init__(self):
        if not self.include:
            raise ValueError(f"rule for {self.service!r} has no include grams")


@dataclass(frozen=True)
class ServiceLabel:
    service: str  # "unknown" when nothing matched
    matched_gram: str | None = None
    category: str | None = None


UNKNOWN = ServiceLabel("unknown", None, None)


class ServiceRuleSet:
    def __init__(self, rules: Iterable[ServiceRule]):
        self.rules = tuple(rules)
        seen: set[str] = set()
        for rule in self.rules:
            if rule.service in seen:
                raise ValueError(f"duplicate rule for service {rule.service!r}")
            seen.add(rule.service)

    @classmethod
    def load(cls, path: str | Path | None = None) -> "ServiceRuleSet":
        if path is None:
            fh = resources.files("gatewatch.data").joinpath("service_rules.json").open(
                encoding="utf-8"
            )
        else:
            fh = Path(path).open(encoding="utf-8")
        with fh:
            raw = json.load(fh)
        return cls(
            ServiceRule(
                service=r["service"],
                category=r.get("category", "Other"),
                include=tuple(r["include"]),
                exclude=tuple(r.get("exclude", ())),
                priority=int(r.get("priority", 0)),
            )
            for r in raw
        )

    def dump(self, path: str | Path) -> None:
        rows = [
            {
                "service": r.service,
                "category": r.category,
                "include": sorted(r.include),
                "exclude": sorted(r.exclude),
                "priority": r.priority,
            }
            for r in sorted(self.rules, key=lambda r: r.service)
        ]
        Path(path).write_text(
            json.dumps(rows, ensure_ascii=False, indent=1, sort_keys=True) + "\n",
            encoding="utf-8",
        )


def _grams_present(tokens: list[str]) -> set[str]:
    grams = set(tokens)
    grams.update(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    return grams


def attribute(msg_text: str, rules: ServiceRuleSet) -> ServiceLabel:
    tokens = tokenize(msg_text)
    present = _grams_present(tokens)
    best: tuple[int, int, str] | None = None  # (-priority, -len(gram), service)
    best_label: ServiceLabel | None = None
    for rule in rules.rules:
        if any(g in present for g in rule.exclude):
            continue
        matched = [g for g in rule.include if g in present]
        if not matched:
            continue
        gram = max(matched, key=lambda g: (len(g), g))
        key = (-rule.priority, -len(gram), rule.service)
        if best is None or key < best:
            best = key
            best_label = ServiceLabel(rule.service, gram, rule.category)
    return best_label or UNKNOWN


@dataclass
class MislabelReport:
    accuracy: float
    total: int
    errors: int
    false_negatives: int  # gold service, predicted unknown
    false_positives: dict[str, int] = field(default_factory=dict)  # predicted svc
    missed: dict[str, int] = field(default_factory=dict)  # gold svc not recovered
    offending_grams: list[tuple[str, int]] = field(default_factory=list)

    @property
    def false_negative_share(self) -> float:
        return self.false_negatives / self.errors if self.errors else 0.0


def mislabel_report(
    samples: Iterable[tuple[str, str]], rules: ServiceRuleSet
) -> MislabelReport:
    """Confusion summary over (message text, gold service) pairs."""
    total = errors = false_negatives = 0
    false_positives: Counter[str] = Counter()
    missed: Counter[str] = Counter()
    offenders: Counter[str] = Counter()
    for text, gold in samples:
        total += 1
        label = attribute(text, rules)
        if label.service == gold:
            continue
        errors += 1
        if label.service == "unknown":
            false_negatives += 1
            missed[gold] += 1
        else:
            false_positives[label.service] += 1
            if gold != "unknown":
                missed[gold] += 1
            if label.matched_gram:
                offenders[label.matched_gram] += 1
    accuracy = (total - errors) / total if total else 1.0
    return MislabelReport(
        accuracy=accuracy,
        total=total,
        errors=errors,
        false_negatives=false_negatives,
        false_positives=dict(false_positives),
        missed=dict(missed),
        offending_grams=sorted(offenders.items(), key=lambda kv: (-kv[1], kv[0])),
    )
