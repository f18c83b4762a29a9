"""Per-city aggregation of classified, delineated, bot-flagged records.

Counting is exact; the only derived fields are ratios, and each aggregate
carries the census covariates and hate-crime count from the registry so the
regression stage can consume the table directly.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import CityRegistry
from .delineate import SELF_NARRATION, TARGETED
from .errors import InvariantViolation


@dataclass(frozen=True)
class ClassifiedRecord:
    """One record after the classify/delineate/botscan stages."""

    id: str
    city_key: str
    user_id: str
    year: int
    score: float
    is_discrimination: bool
    delineation: str | None  # targeted / self_narration when discrimination
    is_bot: bool


@dataclass
class CityAggregate:
    city_key: str
    total_records: int = 0
    discrimination_records: int = 0
    targeted: int = 0
    self_narration: int = 0
    unique_discrimination_users: int = 0
    bot_discrimination_users: int = 0
    hate_crime_count: int = 0

    @property
    def discrimination_rate(self) -> float:
        return self.discrimination_records / self.total_records if self.total_records else 0.0

    @property
    def targeted_proportion(self) -> float:
        denom = self.targeted + self.self_narration
        return self.targeted / denom if denom else 0.0

    @property
    def targeted_self_ratio(self) -> float | None:
        """Raw targeted/self ratio; None when there is no self-narration."""
        if self.self_narration == 0:
            return None
        return self.targeted / self.self_narration

    @property
    def tweets_per_user(self) -> float | None:
        if self.unique_discrimination_users == 0:
            return None
        return self.discrimination_records / self.unique_discrimination_users

    @property
    def bot_share(self) -> float:
        if self.unique_discrimination_users == 0:
            return 0.0
        return self.bot_discrimination_users / self.unique_discrimination_users


def aggregate_cities(
    records: list[ClassifiedRecord], registry: CityRegistry
) -> list[CityAggregate]:
    """Exact per-city counts; raises on a record naming an unknown city."""
    by_city: dict[str, CityAggregate] = {
        key: CityAggregate(city_key=key, hate_crime_count=rec.hate_crime_count)
        for key, rec in registry.records.items()
    }
    disc_users: dict[str, set[str]] = {key: set() for key in by_city}
    bot_users: dict[str, set[str]] = {key: set() for key in by_city}
    for rec in records:
        agg = by_city.get(rec.city_key)
        if agg is None:
            raise InvariantViolation(
                f"record {rec.id} carries unknown city_key {rec.city_key}; "
                "upstream stages must only emit registry cities"
            )
        agg.total_records += 1
        if rec.is_discrimination:
            agg.discrimination_records += 1
            if rec.delineation == TARGETED:
                agg.targeted += 1
            elif rec.delineation == SELF_NARRATION:
                agg.self_narration += 1
            else:
                raise InvariantViolation(
                    f"discrimination record {rec.id} lacks a delineation"
                )
            disc_users[rec.city_key].add(rec.user_id)
            if rec.is_bot:
                bot_users[rec.city_key].add(rec.user_id)
    out = []
    for key in sorted(by_city):
        agg = by_city[key]
        agg.unique_discrimination_users = len(disc_users[key])
        agg.bot_discrimination_users = len(bot_users[key])
        if agg.targeted + agg.self_narration != agg.discrimination_records:
            raise InvariantViolation(f"delineation counts disagree for {key}")
        out.append(agg)
    return out


def check_aggregate_identity(aggs: list[CityAggregate], records: list[ClassifiedRecord]) -> None:
    """Global count identities: per-city sums must equal the global tallies."""
    if sum(a.total_records for a in aggs) != len(records):
        raise InvariantViolation("per-city totals do not sum to the record count")
    n_disc = sum(1 for r in records if r.is_discrimination)
    if sum(a.discrimination_records for a in aggs) != n_disc:
        raise InvariantViolation("per-city discrimination counts do not sum to the global count")
    if sum(a.targeted + a.self_narration for a in aggs) != n_disc:
        raise InvariantViolation("delineation partition broken")
