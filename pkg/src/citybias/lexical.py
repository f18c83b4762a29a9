"""Category-lexicon scoring of records, with group ratios and user buckets.

A category is a named term list (terms may be multi-word phrases).  A
record's score for a category is the fraction of its token positions covered
by matches of that category's terms, so scores live in [0, 1] and duplicate
text leaves them unchanged.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .lexicon import PhraseMatcher
from .stats import spearman
from .tokenize import tokenize

# the preset category set used by the replication config
PRESET_CATEGORIES = (
    "positive_emotion",
    "negative_emotion",
    "disappointment",
    "sadness",
    "aggression",
    "violence",
    "work",
    "money",
    "night",
)

DEFAULT_VOLUME_BOUNDS = (1, 21)


@dataclass(frozen=True)
class CategoryLexicon:
    name: str
    terms: tuple[tuple[str, ...], ...]  # each term a token sequence


def load_categories(path: str | Path) -> list[CategoryLexicon]:
    """Parse `category:term1,term2,...` lines; # comments and blanks ignored."""
    cats: list[CategoryLexicon] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise ConfigError(f"{path} line {lineno}: expected category:terms")
            name, _, rest = line.partition(":")
            name = name.strip()
            if not name:
                raise ConfigError(f"{path} line {lineno}: empty category name")
            if name in seen:
                raise ConfigError(f"{path} line {lineno}: duplicate category {name}")
            terms = tuple(
                tuple(tokenize(t)) for t in rest.split(",") if t.strip()
            )
            terms = tuple(t for t in terms if t)
            if not terms:
                raise ConfigError(f"{path} line {lineno}: category {name} has no terms")
            seen.add(name)
            cats.append(CategoryLexicon(name=name, terms=terms))
    return cats


class CategoryScorer:
    """One shared phrase scan for all categories."""

    def __init__(self, lexicons: list[CategoryLexicon]):
        self.names = tuple(l.name for l in lexicons)
        phrase_cats: dict[tuple[str, ...], list[int]] = {}
        for ci, lex in enumerate(lexicons):
            for term in lex.terms:
                phrase_cats.setdefault(term, []).append(ci)
        self._phrase_cats = phrase_cats
        self._matcher = PhraseMatcher(list(phrase_cats))

    def score_tokens(self, tokens: list[str]) -> dict[str, float]:
        if not tokens:
            return {name: 0.0 for name in self.names}
        covered: list[set[int]] = [set() for _ in self.names]
        for start, phrase in self._matcher.find(tokens):
            span = range(start, start + len(phrase))
            for ci in self._phrase_cats[phrase]:
                covered[ci].update(span)
        n = len(tokens)
        return {name: len(cov) / n for name, cov in zip(self.names, covered)}

    def score_text(self, text: str) -> dict[str, float]:
        return self.score_tokens(tokenize(text))


def score_record(text: str, lexicons: list[CategoryLexicon]) -> dict[str, float]:
    return CategoryScorer(lexicons).score_text(text)


def mean_profile(texts: list[str], scorer: CategoryScorer) -> dict[str, float]:
    if not texts:
        raise ValueError("empty group")
    sums = {name: 0.0 for name in scorer.names}
    for t in texts:
        for name, v in scorer.score_text(t).items():
            sums[name] += v
    return {name: s / len(texts) for name, s in sums.items()}


def group_ratio(
    group_a: list[str], group_b: list[str], lexicons: list[CategoryLexicon]
) -> tuple[dict[str, float | None], float | None]:
    """Per-category mean-score ratio a/b; None where the b mean is zero.

    Also returns the grand mean over the defined ratios.
    """
    if not group_a or not group_b:
        raise ValueError("empty group")
    scorer = CategoryScorer(lexicons)
    mean_a = mean_profile(group_a, scorer)
    mean_b = mean_profile(group_b, scorer)
    ratios: dict[str, float | None] = {}
    defined: list[float] = []
    for name in scorer.names:
        if mean_b[name] == 0.0:
            ratios[name] = None
        else:
            r = mean_a[name] / mean_b[name]
            ratios[name] = r
            defined.append(r)
    grand = float(np.mean(defined)) if defined else None
    return ratios, grand


def volume_bucket(count: int, bounds: tuple[int, int] = DEFAULT_VOLUME_BOUNDS) -> str:
    low, high = bounds
    if count <= low:
        return str(low)
    if count <= high:
        return f"{low + 1}-{high}"
    return f">{high}"


def user_profiles(
    records_by_user: dict[str, list[str]],
    lexicons: list[CategoryLexicon],
    bounds: tuple[int, int] = DEFAULT_VOLUME_BOUNDS,
) -> tuple[dict[str, dict[str, float]], dict[tuple[str, str], tuple[float, float]]]:
    """Mean category profile per posting-volume bucket, plus inter-bucket Spearman.

    Bucket labels for the default bounds: "1", "2-21", ">21".  Empty buckets
    are omitted with a warning; correlations need at least 3 categories.
    """
    scorer = CategoryScorer(lexicons)
    bucket_texts: dict[str, list[str]] = {}
    for _, texts in sorted(records_by_user.items()):
        label = volume_bucket(len(texts), bounds)
        bucket_texts.setdefault(label, []).extend(texts)
    expected = [str(bounds[0]), f"{bounds[0] + 1}-{bounds[1]}", f">{bounds[1]}"]
    profiles: dict[str, dict[str, float]] = {}
    for label in expected:
        if label not in bucket_texts:
            warnings.warn(f"volume bucket {label} is empty", stacklevel=2)
            continue
        profiles[label] = mean_profile(bucket_texts[label], scorer)
    correlations: dict[tuple[str, str], tuple[float, float]] = {}
    labels = list(profiles)
    for i, a in enumerate(labels):
        for b in labels[i + 1 :]:
            va = [profiles[a][name] for name in scorer.names]
            vb = [profiles[b][name] for name in scorer.names]
            try:
                correlations[(a, b)] = spearman(va, vb)
            except (ValueError, ConfigError) as exc:
                warnings.warn(f"no correlation for ({a},{b}): {exc}", stacklevel=2)
    return profiles, correlations
