"""Cascaded language identification for short SMS texts.

Stages, first confident answer wins:
  1. distinctive-phrase rules (substring match on normalized text)
  2. Unicode-script ranges (share of letters inside a rule's ranges)
  3. character-trigram statistical fallback (cosine against profiles)
  4. "und"
"""

from __future__ import annotations

import json
import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from importlib import resources

TRIGRAM_CONFIDENCE = 0.6  # normalized trigram-cosine score cutoff
MIN_TRIGRAMS = 12  # below this the statistical stage abstains


@dataclass(frozen=True)
class PhraseRule:
    substring: str  # case-insensitive, >= 4 chars
    lang: str

    def __post_init__(self):
        if len(self.substring) < 4:
            raise ValueError("phrase substrings must be >= 4 chars")


@dataclass(frozen=True)
class ScriptRule:
    ranges: tuple[tuple[int, int], ...]  # inclusive codepoint ranges
    lang: str
    min_fraction: float = 0.5


@dataclass(frozen=True)
class LangResult:
    code: str  # ISO-639 tag or "und"
    stage: str  # "phrase" | "script" | "trigram" | "none"


_WS_RE = re.compile(r"\s+")


def normalize_text(raw: str) -> str:
    """Strip punctuation/symbols, collapse whitespace, casefold.

    Diacritics are preserved; stripping them is an attribution concern.
    Idempotent.
    """
    out = []
    for ch in raw:
        cat = unicodedata.category(ch)
        if cat.startswith(("P", "S", "C")):
            out.append(" ")
        else:
            out.append(ch)
    return _WS_RE.sub(" ", "".join(out)).strip().casefold()


def trigrams_of(text: str) -> list[str]:
    """Character trigrams over the letter-and-space skeleton of the text."""
    skeleton = "".join(ch if ch.isalpha() or ch == " " else " " for ch in text)
    skeleton = _WS_RE.sub(" ", skeleton).strip()
    if not skeleton:
        return []
    padded = f" {skeleton} "
    return [padded[i : i + 3] for i in range(len(padded) - 2)]


class TrigramModel:
    def __init__(self, profiles: dict[str, dict[str, float]]):
        self.profiles: dict[str, dict[str, float]] = {}
        for lang, counts in profiles.items():
            norm = math.sqrt(sum(v * v for v in counts.values()))
            self.profiles[lang] = {g: v / norm for g, v in counts.items()}

    def scores(self, text: str) -> dict[str, float]:
        counts = Counter(trigrams_of(text))
        if not counts:
            return {}
        norm = math.sqrt(sum(v * v for v in counts.values()))
        return {
            lang: sum(profile.get(g, 0.0) * v for g, v in counts.items()) / norm
            for lang, profile in self.profiles.items()
        }

    def classify(self, text: str) -> tuple[str, float]:
        """Best language and its normalized cosine score.

        The score is cos_best / (cos_best + cos_second): 1.0 for an
        unambiguous winner, 0.5 when the top two profiles tie.
        """
        if len(trigrams_of(text)) < MIN_TRIGRAMS:
            return "und", 0.0
        scores = self.scores(text)
        if not scores:
            return "und", 0.0
        ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
        best_lang, best = ranked[0]
        if best <= 0.0:
            return "und", 0.0
        second = ranked[1][1] if len(ranked) > 1 else 0.0
        return best_lang, best / (best + max(second, 0.0))


def load_phrase_rules() -> list[PhraseRule]:
    with resources.files("gatewatch.data").joinpath("phrase_rules.json").open(
        encoding="utf-8"
    ) as fh:
        return [PhraseRule(r["substring"], r["lang"]) for r in json.load(fh)]


def load_script_rules() -> list[ScriptRule]:
    with resources.files("gatewatch.data").joinpath("script_rules.json").open(
        encoding="utf-8"
    ) as fh:
        return [
            ScriptRule(tuple(tuple(r) for r in rule["ranges"]), rule["lang"],
                       rule.get("min_fraction", 0.5))
            for rule in json.load(fh)
        ]


def load_trigram_model() -> TrigramModel:
    with resources.files("gatewatch.data").joinpath("trigram_profiles.json").open(
        encoding="utf-8"
    ) as fh:
        return TrigramModel(json.load(fh))


def detect_language(
    text: str,
    phrase_rules: list[PhraseRule],
    script_rules: list[ScriptRule],
    fallback_model: TrigramModel | None,
    confidence: float = TRIGRAM_CONFIDENCE,
) -> LangResult:
    """Run the cascade over already-normalized text."""
    for rule in phrase_rules:
        if rule.substring.casefold() in text:
            return LangResult(rule.lang, "phrase")

    letters = [ch for ch in text if ch.isalpha()]
    if letters:
        for rule in script_rules:
            inside = sum(
                1
                for ch in letters
                if any(lo <= ord(ch) <= hi for lo, hi in rule.ranges)
            )
            if inside / len(letters) >= rule.min_fraction:
                return LangResult(rule.lang, "script")

    if fallback_model is not None:
        lang, score = fallback_model.classify(text)
        if lang != "und" and score >= confidence:
            return LangResult(lang, "trigram")

    return LangResult("und", "none")


class LanguageDetector:
    """Bundled-rule convenience wrapper around :func:`detect_language`."""

    def __init__(self):
        self.phrase_rules = load_phrase_rules()
        self.script_rules = load_script_rules()
        self.model = load_trigram_model()

    def detect(self, raw_text: str) -> LangResult:
        return detect_language(
            normalize_text(raw_text), self.phrase_rules, self.script_rules, self.model
        )
