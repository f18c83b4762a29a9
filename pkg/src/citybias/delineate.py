"""Targeted vs. self-narration split for discrimination-classified records.

A record is self-narration only when first-person pronouns hold an absolute
majority over second plus third person combined.  Counting runs on the shared
tokenizer, so contraction heads count ("they're" contributes "they").
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .tokenize import tokenize

TARGETED = "targeted"
SELF_NARRATION = "self_narration"

DEFAULT_FIRST = ("i", "me", "mine", "my", "we", "us", "our", "ours")
DEFAULT_SECOND = ("you", "your", "yours")
# "it"/"its" deliberately included: inflating the denominator only makes the
# self-narration test stricter
DEFAULT_THIRD = ("he", "him", "his", "she", "her", "hers", "they", "them", "their", "theirs", "it", "its")


@dataclass(frozen=True)
class PronounLists:
    first: frozenset[str] = field(default_factory=lambda: frozenset(DEFAULT_FIRST))
    second: frozenset[str] = field(default_factory=lambda: frozenset(DEFAULT_SECOND))
    third: frozenset[str] = field(default_factory=lambda: frozenset(DEFAULT_THIRD))

    @classmethod
    def from_config(cls, first=None, second=None, third=None) -> "PronounLists":
        return cls(
            first=frozenset(t.casefold() for t in (first or DEFAULT_FIRST)),
            second=frozenset(t.casefold() for t in (second or DEFAULT_SECOND)),
            third=frozenset(t.casefold() for t in (third or DEFAULT_THIRD)),
        )


DEFAULT_PRONOUNS = PronounLists()


@dataclass(frozen=True)
class PronounCounts:
    first: int
    second: int
    third: int


def count_pronouns(text: str, lists: PronounLists = DEFAULT_PRONOUNS) -> PronounCounts:
    first = second = third = 0
    for tok in tokenize(text):
        if tok in lists.first:
            first += 1
        elif tok in lists.second:
            second += 1
        elif tok in lists.third:
            third += 1
    return PronounCounts(first, second, third)


def delineate(text: str, lists: PronounLists = DEFAULT_PRONOUNS) -> str:
    """Return "self_narration" or "targeted" for an already-classified record."""
    c = count_pronouns(text, lists)
    if c.first >= 1 and c.first > c.second + c.third:
        return SELF_NARRATION
    return TARGETED
