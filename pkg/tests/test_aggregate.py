import pytest

from citybias.aggregate import (
    CityAggregate,
    ClassifiedRecord,
    aggregate_cities,
    check_aggregate_identity,
)
from citybias.corpus import CensusCovariates, CityRecord, CityRegistry
from citybias.delineate import SELF_NARRATION, TARGETED
from citybias.errors import InvariantViolation

CENSUS = CensusCovariates(
    pct_white=60.0,
    pct_black=20.0,
    pct_asian=5.0,
    pct_hispanic_latino=15.0,
    pct_foreign_born=10.0,
    pct_female=51.0,
    pct_age_18_64=62.0,
    population_density=3000.0,
    median_income=52_000.0,
)


def make_registry(keys):
    records = [
        CityRecord(
            city_key=key,
            aliases=(key.replace("-", " "),),
            hate_crime_count=10 + i,
            census=CENSUS,
            coord=(40.0 + i, -90.0 - i),
        )
        for i, key in enumerate(keys)
    ]
    return CityRegistry(records=records)


def rec(i, city, user="u1", disc=False, delineation=None, bot=False, year=2014):
    return ClassifiedRecord(
        id=f"rec{i}",
        city_key=city,
        user_id=user,
        year=year,
        score=0.9 if disc else 0.1,
        is_discrimination=disc,
        delineation=delineation,
        is_bot=bot,
    )


def test_counts_by_city():
    registry = make_registry(["alpha-il", "beta-tx"])
    records = [
        rec(0, "alpha-il", "u1", disc=True, delineation=TARGETED),
        rec(1, "alpha-il", "u1", disc=True, delineation=SELF_NARRATION),
        rec(2, "alpha-il", "u2", disc=True, delineation=TARGETED, bot=True),
        rec(3, "alpha-il", "u3"),
        rec(4, "beta-tx", "u4"),
    ]
    aggs = aggregate_cities(records, registry)
    assert [a.city_key for a in aggs] == ["alpha-il", "beta-tx"]
    alpha, beta = aggs
    assert alpha.total_records == 4
    assert alpha.discrimination_records == 3
    assert alpha.targeted == 2
    assert alpha.self_narration == 1
    assert alpha.unique_discrimination_users == 2
    assert alpha.bot_discrimination_users == 1
    assert alpha.hate_crime_count == 10
    assert beta.total_records == 1
    assert beta.discrimination_records == 0


def test_rate_and_proportion_properties():
    agg = CityAggregate(
        city_key="x",
        total_records=100,
        discrimination_records=9,
        targeted=6,
        self_narration=3,
        unique_discrimination_users=4,
        bot_discrimination_users=1,
    )
    assert agg.discrimination_rate == pytest.approx(0.09)
    assert agg.targeted_proportion == pytest.approx(6 / 9)
    assert agg.targeted_self_ratio == pytest.approx(2.0)
    assert agg.tweets_per_user == pytest.approx(9 / 4)
    assert agg.bot_share == pytest.approx(0.25)


def test_zero_discrimination_city_defined_fields():
    agg = CityAggregate(city_key="quiet", total_records=50)
    assert agg.discrimination_rate == 0.0
    assert agg.targeted_proportion == 0.0
    assert agg.targeted_self_ratio is None
    assert agg.tweets_per_user is None
    assert agg.bot_share == 0.0


def test_zero_records_city_present_in_output():
    registry = make_registry(["alpha-il", "silent-mt"])
    aggs = aggregate_cities([rec(0, "alpha-il")], registry)
    assert [a.city_key for a in aggs] == ["alpha-il", "silent-mt"]
    silent = aggs[1]
    assert silent.total_records == 0
    assert silent.discrimination_rate == 0.0


def test_unknown_city_raises():
    registry = make_registry(["alpha-il"])
    with pytest.raises(InvariantViolation, match="unknown city_key"):
        aggregate_cities([rec(0, "ghost-zz")], registry)


def test_discrimination_without_delineation_raises():
    registry = make_registry(["alpha-il"])
    with pytest.raises(InvariantViolation, match="delineation"):
        aggregate_cities([rec(0, "alpha-il", disc=True, delineation=None)], registry)
    with pytest.raises(InvariantViolation, match="delineation"):
        aggregate_cities([rec(0, "alpha-il", disc=True, delineation="other")], registry)


def test_non_discrimination_delineation_ignored():
    registry = make_registry(["alpha-il"])
    aggs = aggregate_cities([rec(0, "alpha-il", disc=False, delineation=None)], registry)
    assert aggs[0].targeted == 0


def test_91_9_split():
    registry = make_registry(["metro-ca"])
    records = []
    for i in range(91):
        records.append(rec(i, "metro-ca", f"u{i}", disc=True, delineation=TARGETED))
    for i in range(91, 100):
        records.append(rec(i, "metro-ca", f"u{i}", disc=True, delineation=SELF_NARRATION))
    aggs = aggregate_cities(records, registry)
    assert aggs[0].targeted_proportion == pytest.approx(0.91)


def test_identity_check_passes_and_fails():
    registry = make_registry(["alpha-il"])
    records = [
        rec(0, "alpha-il", disc=True, delineation=TARGETED),
        rec(1, "alpha-il"),
    ]
    aggs = aggregate_cities(records, registry)
    check_aggregate_identity(aggs, records)  # must not raise

    with pytest.raises(InvariantViolation):
        check_aggregate_identity(aggs, records + [rec(2, "alpha-il")])

    broken = [CityAggregate(city_key="alpha-il", total_records=2, discrimination_records=0)]
    with pytest.raises(InvariantViolation):
        check_aggregate_identity(broken, records)


def test_bot_flag_only_counts_discrimination_users():
    registry = make_registry(["alpha-il"])
    records = [
        rec(0, "alpha-il", "benign_bot", disc=False, bot=True),
        rec(1, "alpha-il", "disc_bot", disc=True, delineation=TARGETED, bot=True),
    ]
    aggs = aggregate_cities(records, registry)
    assert aggs[0].bot_discrimination_users == 1
    assert aggs[0].unique_discrimination_users == 1
