"""Keyword lexicon: loading, filtering, and multi-pattern phrase matching.

The lexicon is a CSV of short phrases with usage counts and inclusion flags.
Matching runs over the shared token stream, so a phrase hits only at token
boundaries ("whitetrash" never matches the two-token phrase "white trash").
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .tokenize import tokenize

_TRUE = {"true", "1", "yes"}
_FALSE = {"false", "0", "no"}


@dataclass(frozen=True)
class LexiconEntry:
    phrase: tuple[str, ...]
    sightings: int
    is_nationality_or_ethnicity: bool
    is_english: bool
    excluded_colloquial: bool

    @property
    def phrase_text(self) -> str:
        return " ".join(self.phrase)


def _parse_bool(raw: str, field: str, line: int) -> bool:
    low = raw.strip().casefold()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ConfigError(f"lexicon line {line}: bad boolean {raw!r} in {field}")


def load_lexicon(path: str | Path) -> list[LexiconEntry]:
    """Parse the lexicon CSV (phrase,sightings,nationality_ethnicity,english,excluded)."""
    entries: list[LexiconEntry] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"phrase", "sightings", "nationality_ethnicity", "english", "excluded"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ConfigError(f"lexicon file {path}: missing columns {sorted(required - set(reader.fieldnames or []))}")
        for lineno, row in enumerate(reader, start=2):
            phrase = tuple(tokenize(row["phrase"]))
            if not phrase or len(phrase) > 4:
                raise ConfigError(f"lexicon line {lineno}: phrase must be 1-4 tokens, got {row['phrase']!r}")
            sightings = int(row["sightings"])
            if sightings < 0:
                raise ConfigError(f"lexicon line {lineno}: negative sightings")
            entries.append(
                LexiconEntry(
                    phrase=phrase,
                    sightings=sightings,
                    is_nationality_or_ethnicity=_parse_bool(row["nationality_ethnicity"], "nationality_ethnicity", lineno),
                    is_english=_parse_bool(row["english"], "english", lineno),
                    excluded_colloquial=_parse_bool(row["excluded"], "excluded", lineno),
                )
            )
    return entries


def filter_lexicon(
    entries: list[LexiconEntry],
    min_sightings: int = 10,
    require_discrimination: bool = True,
) -> list[LexiconEntry]:
    """Keep phrases seen strictly more than min_sightings times, English only,
    colloquial exclusions dropped; optionally restrict to nationality/ethnicity
    terms."""
    kept = []
    for e in entries:
        if e.sightings <= min_sightings:
            continue
        if not e.is_english or e.excluded_colloquial:
            continue
        if require_discrimination and not e.is_nationality_or_ethnicity:
            continue
        kept.append(e)
    return kept


class PhraseMatcher:
    """Token-level Aho-Corasick over a fixed phrase set.

    Build once, then scan any number of token streams; a scan touches each
    token a constant number of times regardless of phrase count.
    """

    def __init__(self, phrases: list[tuple[str, ...]]):
        # goto is a trie over tokens; node 0 is the root
        self._goto: list[dict[str, int]] = [{}]
        self._fail: list[int] = [0]
        self._out: list[list[tuple[str, ...]]] = [[]]
        for phrase in phrases:
            node = 0
            for tok in phrase:
                nxt = self._goto[node].get(tok)
                if nxt is None:
                    nxt = len(self._goto)
                    self._goto[node][tok] = nxt
                    self._goto.append({})
                    self._fail.append(0)
                    self._out.append([])
                node = nxt
            if phrase not in self._out[node]:
                self._out[node].append(phrase)
        self._build_failure_links()

    def _build_failure_links(self) -> None:
        queue: deque[int] = deque()
        for child in self._goto[0].values():
            self._fail[child] = 0
            queue.append(child)
        while queue:
            node = queue.popleft()
            for tok, child in self._goto[node].items():
                queue.append(child)
                f = self._fail[node]
                while f and tok not in self._goto[f]:
                    f = self._fail[f]
                self._fail[child] = self._goto[f].get(tok, 0)
                self._out[child] = self._out[child] + self._out[self._fail[child]]

    def find(self, tokens: list[str]) -> list[tuple[int, tuple[str, ...]]]:
        """All (start_index, phrase) occurrences, sorted by start then longer first."""
        hits: list[tuple[int, tuple[str, ...]]] = []
        node = 0
        for end, tok in enumerate(tokens):
            while node and tok not in self._goto[node]:
                node = self._fail[node]
            node = self._goto[node].get(tok, 0)
            for phrase in self._out[node]:
                hits.append((end - len(phrase) + 1, phrase))
        hits.sort(key=lambda h: (h[0], -len(h[1])))
        return hits


def match_keywords(text: str, entries: list[LexiconEntry]) -> list[str]:
    """All lexicon phrases occurring in the text, in text order.

    Convenience wrapper that builds a matcher per call; pipeline code holds a
    PhraseMatcher instead.
    """
    matcher = PhraseMatcher([e.phrase for e in entries])
    return [" ".join(phrase) for _, phrase in matcher.find(tokenize(text))]
