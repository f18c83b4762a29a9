"""Known-bot flagging from published account lists.

Lists arrive in heterogeneous formats, so each one is a plain text file of
user ids (one per line) referenced from a manifest CSV.  Flagged records are
kept, not dropped; the pipeline exports the flag and a per-city share of
bot users among discrimination-posting users.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError


@dataclass(frozen=True)
class BotList:
    source: str
    user_ids: frozenset[str]
    period_note: str


def load_bot_lists(manifest_path: str | Path) -> list[BotList]:
    """Manifest CSV source,path,period_note; id-file paths resolve relative to it."""
    manifest_path = Path(manifest_path)
    lists: list[BotList] = []
    with open(manifest_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"source", "path", "period_note"}
        if not required.issubset(reader.fieldnames or []):
            raise ConfigError(f"bot manifest {manifest_path}: needs columns {sorted(required)}")
        for row in reader:
            id_path = Path(row["path"])
            if not id_path.is_absolute():
                id_path = manifest_path.parent / id_path
            ids = set()
            with open(id_path, encoding="utf-8") as id_fh:
                for line in id_fh:
                    uid = line.strip()
                    if uid and not uid.startswith("#"):
                        ids.add(uid)
            lists.append(BotList(source=row["source"], user_ids=frozenset(ids),
                                 period_note=row["period_note"]))
    return lists


def bot_union(lists: list[BotList]) -> frozenset[str]:
    out: set[str] = set()
    for bl in lists:
        out |= bl.user_ids
    return frozenset(out)


def flag_records(user_ids: list[str], union: frozenset[str]) -> list[bool]:
    return [uid in union for uid in user_ids]


def city_bot_shares(
    discrimination_users_by_city: dict[str, set[str]], union: frozenset[str]
) -> dict[str, float]:
    """Share of each city's discrimination-posting users found on a bot list."""
    shares: dict[str, float] = {}
    for city, users in discrimination_users_by_city.items():
        if not users:
            shares[city] = 0.0
        else:
            shares[city] = sum(1 for u in users if u in union) / len(users)
    return shares
