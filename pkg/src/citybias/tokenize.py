"""Shared tokenizer used by every text-consuming stage.

All components (lexicon filtering, classifier features, pronoun counting,
category scoring) must see identical token streams, so this module is the
single place where text is split.
"""

from __future__ import annotations

import string

MENTION_PLACEHOLDER = "@user"

# leading/trailing characters stripped from raw whitespace tokens; leading
# "#" and "@" survive because they mark hashtags and mentions
_STRIP_CHARS = frozenset(string.punctuation) | frozenset("“”‘’…–—«»")
_KEEP_LEADING = frozenset("#@")
_APOSTROPHES = ("'", "’")


def _strip(raw: str) -> str:
    start, end = 0, len(raw)
    while start < end and raw[start] in _STRIP_CHARS and raw[start] not in _KEEP_LEADING:
        start += 1
    while end > start and raw[end - 1] in _STRIP_CHARS:
        end -= 1
    return raw[start:end]


def _split_apostrophes(token: str) -> list[str]:
    parts = [token]
    for ch in _APOSTROPHES:
        parts = [piece for p in parts for piece in p.split(ch)]
    return [p for p in parts if p]


def tokenize(text: str) -> list[str]:
    """Casefold, split on whitespace, strip edge punctuation, normalize.

    Mentions collapse to a fixed placeholder so user names never become
    features; hashtags stay whole; contractions split at the apostrophe
    ("they're" -> ["they", "re"]).
    """
    out: list[str] = []
    for raw in text.casefold().split():
        tok = _strip(raw)
        if not tok or all(c in _STRIP_CHARS for c in tok):
            continue
        if tok.startswith("@"):
            out.append(MENTION_PLACEHOLDER)
            continue
        if tok.startswith("#"):
            out.append(tok)
            continue
        out.extend(_split_apostrophes(tok))
    return out


def ngrams(tokens: list[str], orders: tuple[int, ...] = (1, 2, 3)) -> list[str]:
    """All order-n token windows, joined by single spaces, for each n."""
    out: list[str] = []
    for n in orders:
        for i in range(len(tokens) - n + 1):
            out.append(" ".join(tokens[i : i + n]))
    return out
