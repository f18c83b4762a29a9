import numpy as np
import pytest

from citybias.errors import ConfigError
from citybias.lexical import (
    CategoryLexicon,
    CategoryScorer,
    group_ratio,
    load_categories,
    mean_profile,
    score_record,
    user_profiles,
    volume_bucket,
)
from citybias.tokenize import tokenize

import oracles


AFFECT = CategoryLexicon(name="affect", terms=(("happy",), ("sad",), ("roller", "coaster")))
WORK = CategoryLexicon(name="work", terms=(("job",), ("boss",), ("work",)))
LEXICONS = [AFFECT, WORK]


def test_load_categories_parses_lines(tmp_path):
    path = tmp_path / "cats.txt"
    path.write_text(
        "# comment\n"
        "\n"
        "affect: happy, sad, roller coaster\n"
        "work:job,boss\n",
        encoding="utf-8",
    )
    cats = load_categories(path)
    assert [c.name for c in cats] == ["affect", "work"]
    assert ("roller", "coaster") in cats[0].terms


def test_load_categories_rejects_bad_lines(tmp_path):
    for body in ["no separator here\n", ": terms\n", "dup:a\ndup:b\n", "blank:, ,\n"]:
        path = tmp_path / "bad.txt"
        path.write_text(body, encoding="utf-8")
        with pytest.raises(ConfigError):
            load_categories(path)


def test_score_is_covered_position_fraction():
    scores = score_record("happy and sad today", LEXICONS)
    assert scores["affect"] == pytest.approx(2 / 4)
    assert scores["work"] == 0.0


def test_multiword_term_covers_both_positions():
    scores = score_record("what a roller coaster day", LEXICONS)
    assert scores["affect"] == pytest.approx(2 / 5)


def test_overlapping_matches_count_once():
    lex = [CategoryLexicon(name="x", terms=(("a", "b"), ("b", "c")))]
    # positions 0,1,2 all covered; the shared "b" is not double counted
    assert score_record("a b c", lex) == {"x": pytest.approx(1.0)}


def test_empty_text_scores_zero():
    assert score_record("", LEXICONS) == {"affect": 0.0, "work": 0.0}


def test_duplicated_text_leaves_score_unchanged():
    one = score_record("happy day at work", LEXICONS)
    twice = score_record("happy day at work happy day at work", LEXICONS)
    for name in one:
        assert twice[name] == pytest.approx(one[name])


def test_scores_bounded_by_one():
    assert score_record("happy sad happy", LEXICONS)["affect"] == pytest.approx(1.0)


def test_scorer_matches_coverage_oracle_on_random_fixtures():
    rng = np.random.default_rng(41)
    vocab = ["happy", "sad", "job", "boss", "roller", "coaster", "day", "rain", "the"]
    scorer = CategoryScorer(LEXICONS)
    oracle_lex = {
        "affect": [("happy",), ("sad",), ("roller", "coaster")],
        "work": [("job",), ("boss",), ("work",)],
    }
    for _ in range(500):
        toks = [str(w) for w in rng.choice(vocab, size=int(rng.integers(1, 15)))]
        got = scorer.score_tokens(toks)
        want = oracles.coverage_scores(toks, oracle_lex)
        for name in oracle_lex:
            assert got[name] == pytest.approx(want[name], abs=1e-12)


def test_mean_profile_averages_and_rejects_empty():
    scorer = CategoryScorer(LEXICONS)
    prof = mean_profile(["happy day", "job day"], scorer)
    assert prof["affect"] == pytest.approx((0.5 + 0.0) / 2)
    assert prof["work"] == pytest.approx((0.0 + 0.5) / 2)
    with pytest.raises(ValueError):
        mean_profile([], scorer)


def test_group_ratio_identical_groups_is_one():
    texts = ["happy at the job", "sad boss day", "roller coaster happy"]
    ratios, grand = group_ratio(texts, list(texts), LEXICONS)
    for v in ratios.values():
        assert v == pytest.approx(1.0, abs=1e-12)
    assert grand == pytest.approx(1.0, abs=1e-12)


def test_group_ratio_reciprocal_product_is_one():
    a = ["happy happy job", "sad day boss", "roller coaster ride"]
    b = ["happy day", "job job job sad", "boss morning"]
    r_ab, _ = group_ratio(a, b, LEXICONS)
    r_ba, _ = group_ratio(b, a, LEXICONS)
    for name in r_ab:
        assert r_ab[name] is not None and r_ba[name] is not None
        assert r_ab[name] * r_ba[name] == pytest.approx(1.0, abs=1e-12)


def test_group_ratio_zero_denominator_is_undefined():
    a = ["happy job day"]
    b = ["nothing matching here"]
    ratios, grand = group_ratio(a, b, LEXICONS)
    assert ratios["affect"] is None
    assert ratios["work"] is None
    assert grand is None


def test_group_ratio_planted_39_to_1():
    # group a: 39 of 40 positions covered; group b: 1 of 40
    a_text = " ".join(["happy"] * 39 + ["the"])
    b_text = " ".join(["happy"] + ["the"] * 39)
    ratios, _ = group_ratio([a_text], [b_text], [AFFECT])
    assert ratios["affect"] == pytest.approx(39.0, abs=0.5)


def test_group_ratio_rejects_empty_group():
    with pytest.raises(ValueError):
        group_ratio([], ["happy"], LEXICONS)
    with pytest.raises(ValueError):
        group_ratio(["happy"], [], LEXICONS)


def test_volume_bucket_boundaries():
    assert volume_bucket(1) == "1"
    assert volume_bucket(2) == "2-21"
    assert volume_bucket(21) == "2-21"
    assert volume_bucket(22) == ">21"
    assert volume_bucket(500) == ">21"


def test_volume_bucket_custom_bounds():
    assert volume_bucket(3, (3, 10)) == "3"
    assert volume_bucket(4, (3, 10)) == "4-10"
    assert volume_bucket(11, (3, 10)) == ">10"


def test_user_profiles_buckets_and_correlations():
    lex = [
        CategoryLexicon(name=f"c{i}", terms=((w,),))
        for i, w in enumerate(["happy", "sad", "job", "boss", "rain"])
    ]
    users = {
        "solo": ["happy day"],
        "solo2": ["sad job"],
        "regular": ["happy sad job"] * 5,
        "heavy": ["happy happy sad job boss"] * 30,
    }
    profiles, correlations = user_profiles(users, lex)
    assert set(profiles) == {"1", "2-21", ">21"}
    # the "1" bucket pools both single-record users
    scorer = CategoryScorer(lex)
    direct = mean_profile(["happy day", "sad job"], scorer)
    for name, v in direct.items():
        assert profiles["1"][name] == pytest.approx(v)
    for (a, b), (rho, p) in correlations.items():
        assert -1.0 <= rho <= 1.0
        assert 0.0 <= p <= 1.0
    assert ("1", "2-21") in correlations or len(correlations) <= 3


def test_user_profiles_warns_on_empty_bucket():
    lex = [CategoryLexicon(name="c", terms=(("happy",),))]
    users = {"solo": ["happy day"]}
    with pytest.warns(UserWarning, match="empty"):
        profiles, correlations = user_profiles(users, lex)
    assert set(profiles) == {"1"}
    assert correlations == {}
