"""Corpus ingestion and the city registry.

Reads:  newline-delimited JSON records (id, text, created_at, place, user_id)
        and a registry CSV keyed by city with aliases, hate-crime counts, and
        census covariates.
Writes: nothing directly; callers persist record streams and reject logs.

Place assignment is exact string matching on normalized aliases.  Records are
never silently lost: every input line lands in exactly one of matched,
unmatched (unknown place or outside the study window), or rejected
(malformed / duplicate id), and the three counters sum to the line count.

Ingestion is shard-parallel friendly: process line ranges independently with
ingest_lines, then combine with merge_results, which also enforces id
uniqueness across shard boundaries.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ConfigError

_WS = re.compile(r"\s+")

PCT_FIELDS = (
    "pct_white",
    "pct_black",
    "pct_asian",
    "pct_hispanic_latino",
    "pct_foreign_born",
    "pct_female",
    "pct_age_18_64",
)

REGISTRY_COLUMNS = (
    ("city_key", "aliases", "hate_crimes")
    + PCT_FIELDS
    + ("population_density", "median_income")
)


def normalize_place(name: str) -> str:
    return _WS.sub(" ", name.strip().casefold())


def parse_rfc3339(raw: str) -> datetime:
    """RFC 3339 timestamp to an aware UTC datetime; naive inputs are taken as UTC."""
    text = raw.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


@dataclass(frozen=True)
class TextRecord:
    id: str
    text: str
    timestamp: datetime
    place_name: str
    user_id: str


@dataclass(frozen=True)
class CensusCovariates:
    pct_white: float
    pct_black: float
    pct_asian: float
    pct_hispanic_latino: float
    pct_foreign_born: float
    pct_female: float
    pct_age_18_64: float
    population_density: float
    median_income: float

    def violations(self) -> list[str]:
        bad = [f for f in PCT_FIELDS if not 0.0 <= getattr(self, f) <= 100.0]
        if self.population_density <= 0.0:
            bad.append("population_density")
        if self.median_income <= 0.0:
            bad.append("median_income")
        return bad


@dataclass(frozen=True)
class CityRecord:
    city_key: str
    aliases: tuple[str, ...]
    hate_crime_count: int
    census: CensusCovariates
    coord: tuple[float, float] | None = None  # (lat, lon) when the CSV carries them


class CityRegistry:
    """Alias index over a set of CityRecords.

    An alias claimed by two different cities is ambiguous and is dropped from
    the index entirely (neither city matches it); the conflict is reported by
    the loader.
    """

    def __init__(self, records: list[CityRecord]):
        self.records: dict[str, CityRecord] = {r.city_key: r for r in records}
        self._alias_to_key: dict[str, str] = {}
        self.ambiguous_aliases: list[tuple[str, str, str]] = []
        claimed: dict[str, str] = {}
        for rec in records:
            for alias in rec.aliases:
                norm = normalize_place(alias)
                prior = claimed.get(norm)
                if prior is None:
                    claimed[norm] = rec.city_key
                    self._alias_to_key[norm] = rec.city_key
                elif prior != rec.city_key:
                    self.ambiguous_aliases.append((alias, prior, rec.city_key))
                    self._alias_to_key.pop(norm, None)

    def lookup(self, place_name: str) -> str | None:
        return self._alias_to_key.get(normalize_place(place_name))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[CityRecord]:
        return iter(self.records.values())


def load_city_registry(path: str | Path) -> tuple[CityRegistry, list[tuple[int, str]]]:
    """Load the registry CSV; returns (registry, per-row errors).

    Rows violating census invariants, duplicating a city_key, or carrying no
    aliases are rejected with a reason; a missing column is a hard failure.
    """
    records: list[CityRecord] = []
    errors: list[tuple[int, str]] = []
    seen_keys: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(REGISTRY_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ConfigError(f"registry {path}: missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                key = row["city_key"].strip()
                if not key:
                    errors.append((lineno, "empty city_key"))
                    continue
                if key in seen_keys:
                    errors.append((lineno, f"duplicate city_key {key}"))
                    continue
                aliases = tuple(a.strip() for a in row["aliases"].split("|") if a.strip())
                if not aliases:
                    errors.append((lineno, "no aliases"))
                    continue
                crimes = int(row["hate_crimes"])
                if crimes < 0:
                    errors.append((lineno, "negative hate_crimes"))
                    continue
                census = CensusCovariates(
                    **{f: float(row[f]) for f in PCT_FIELDS},
                    population_density=float(row["population_density"]),
                    median_income=float(row["median_income"]),
                )
            except (KeyError, ValueError) as exc:
                errors.append((lineno, f"unparseable row: {exc}"))
                continue
            bad = census.violations()
            if bad:
                errors.append((lineno, f"census out of range: {','.join(bad)}"))
                continue
            coord = None
            if row.get("lat") not in (None, "") and row.get("lon") not in (None, ""):
                try:
                    coord = (float(row["lat"]), float(row["lon"]))
                except ValueError:
                    errors.append((lineno, "unparseable lat/lon"))
                    continue
            seen_keys.add(key)
            records.append(CityRecord(key, aliases, crimes, census, coord))
    registry = CityRegistry(records)
    for alias, first, second in registry.ambiguous_aliases:
        errors.append((0, f"ambiguous alias {alias!r} claimed by {first} and {second}"))
    return registry, errors


@dataclass
class IngestStats:
    total: int = 0
    matched: int = 0
    unmatched: int = 0
    out_of_window: int = 0  # subset of unmatched
    rejected: int = 0

    def check_partition(self) -> bool:
        return self.matched + self.unmatched + self.rejected == self.total


@dataclass
class IngestResult:
    pairs: list[tuple[TextRecord, str]] = field(default_factory=list)
    stats: IngestStats = field(default_factory=IngestStats)
    rejects: list[tuple[int, str]] = field(default_factory=list)


_REQUIRED_KEYS = ("id", "text", "created_at", "place", "user_id")


def _parse_line(raw: str) -> TextRecord:
    obj = json.loads(raw)
    if not isinstance(obj, dict):
        raise ValueError("not an object")
    for key in _REQUIRED_KEYS:
        if key not in obj:
            raise ValueError(f"missing field {key}")
        if not isinstance(obj[key], str):
            raise ValueError(f"field {key} not a string")
    if not obj["id"]:
        raise ValueError("empty id")
    if not obj["text"].strip():
        raise ValueError("empty text")
    return TextRecord(
        id=obj["id"],
        text=obj["text"],
        timestamp=parse_rfc3339(obj["created_at"]),
        place_name=obj["place"],
        user_id=obj["user_id"],
    )


def ingest_lines(
    lines: Iterable[str],
    registry: CityRegistry,
    window: tuple[datetime, datetime] | None = None,
    seen_ids: set[str] | None = None,
    first_line: int = 1,
) -> IngestResult:
    """Ingest one shard of newline-delimited records.

    window is an inclusive (start, end) pair of aware datetimes; records
    outside it are skipped and counted, not errors.  seen_ids is shared
    in-shard state only; cross-shard duplicates are handled by merge_results.
    """
    res = IngestResult()
    ids = set() if seen_ids is None else seen_ids
    for lineno, raw in enumerate(lines, start=first_line):
        if not raw.strip():
            continue
        res.stats.total += 1
        try:
            rec = _parse_line(raw)
        except (ValueError, json.JSONDecodeError) as exc:
            res.stats.rejected += 1
            res.rejects.append((lineno, f"malformed: {exc}"))
            continue
        if rec.id in ids:
            res.stats.rejected += 1
            res.rejects.append((lineno, f"duplicate id {rec.id}"))
            continue
        ids.add(rec.id)
        if window is not None and not (window[0] <= rec.timestamp <= window[1]):
            res.stats.unmatched += 1
            res.stats.out_of_window += 1
            continue
        key = registry.lookup(rec.place_name)
        if key is None:
            res.stats.unmatched += 1
            continue
        res.stats.matched += 1
        res.pairs.append((rec, key))
    return res


def merge_results(shards: list[IngestResult]) -> IngestResult:
    """Combine shard results in order, demoting cross-shard duplicate ids to rejects."""
    merged = IngestResult()
    seen: set[str] = set()
    for shard in shards:
        merged.stats.total += shard.stats.total
        merged.stats.unmatched += shard.stats.unmatched
        merged.stats.out_of_window += shard.stats.out_of_window
        merged.stats.rejected += shard.stats.rejected
        merged.rejects.extend(shard.rejects)
        for rec, key in shard.pairs:
            if rec.id in seen:
                merged.stats.rejected += 1
                merged.rejects.append((0, f"duplicate id {rec.id} (cross-shard)"))
            else:
                seen.add(rec.id)
                merged.stats.matched += 1
                merged.pairs.append((rec, key))
    return merged


def ingest_corpus(
    path: str | Path,
    registry: CityRegistry,
    window: tuple[datetime, datetime] | None = None,
) -> IngestResult:
    """Single-shard ingest of a whole file."""
    with open(path, encoding="utf-8") as fh:
        return ingest_lines(fh, registry, window=window)


def write_reject_log(path: str | Path, rejects: list[tuple[int, str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["line_number", "reason"])
        for lineno, reason in rejects:
            writer.writerow([lineno, reason])


def record_to_json(rec: TextRecord, city_key: str) -> str:
    """Canonical one-line serialization used for idempotence checks."""
    return json.dumps(
        {
            "id": rec.id,
            "text": rec.text,
            "created_at": rec.timestamp.strftime("%Y-%m-%dT%H:%M:%SZ"),
            "place": rec.place_name,
            "user_id": rec.user_id,
            "city_key": city_key,
        },
        ensure_ascii=False,
        sort_keys=True,
    )


def read_record_json(line: str) -> tuple[TextRecord, str]:
    obj = json.loads(line)
    rec = TextRecord(
        id=obj["id"],
        text=obj["text"],
        timestamp=parse_rfc3339(obj["created_at"]),
        place_name=obj["place"],
        user_id=obj["user_id"],
    )
    return rec, obj["city_key"]
