"""Synthetic corpus generator (the `gen-fixture` subcommand).

Builds a complete, self-consistent input set for demos and the end-to-end
tests: a 100-city registry with census covariates and tie-free hate-crime
counts, a record stream with planted discrimination texts, an answer key, a
keyword lexicon, category lexicons, bot lists, annotation test tasks, and a
ready-to-run config file.

All "slur" terms are invented nonsense words.  The generator exists so the
repository never ships real hateful content; the data layout matches what a
real corpus would use.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

DEFAULT_SEED = 20240613

# invented stand-in group labels; deliberately not real words
SLUR_SINGLE = ["zorblins", "quaxians", "vexfolk", "drennish", "plorbs", "snargles"]
SLUR_MULTI = ["gleep horde", "drub trash", "skarn rats", "morv pack"]

LEXICON_EXTRA = [
    # phrase, sightings, nationality_ethnicity, english, excluded
    ("blinth", 7, True, True, False),          # fails the >10 sightings filter
    ("crandle", 10, True, True, False),        # boundary: 10 is not > 10
    ("plorb cake", 140, True, True, True),     # colloquial use, excluded
    ("snargle bar", 90, True, True, True),     # colloquial use, excluded
    ("fremdling", 55, True, False, False),     # non-English
    ("ausserling", 80, True, False, False),    # non-English
    ("grumbler", 300, False, True, False),     # not a nationality/ethnicity term
    ("loudmouth", 250, False, True, False),    # not a nationality/ethnicity term
]

CATEGORY_LINES = [
    "positive_emotion:happy,joy,great,love,wonderful,smile,proud",
    "negative_emotion:awful,terrible,sick,hate,angry,worst,disgusting",
    "disappointment:letdown,disappointed,failed,regret,useless",
    "sadness:sad,crying,tears,lonely,miserable",
    "aggression:fight,attack,smash,shove,threat,kick",
    "violence:punch,stab,shoot,blood,war,beat",
    "work:job,boss,office,shift,meeting,overtime",
    "money:cash,dollars,rent,paycheck,broke,bills",
    "night:night,midnight,dark,evening,late",
]

_PREFIXES = [
    "Ash", "Brook", "Cedar", "Dun", "Elm", "Fair", "Glen", "Haven", "Iron",
    "Juniper", "Kings", "Lake", "Maple", "North", "Oak", "Pine", "Quarry",
    "River", "Stone", "Thorn", "Under", "Vale", "West", "Yellow", "Zephyr",
]
_SUFFIXES = ["field", "ford", "haven", "mont", "port", "side", "ton", "view", "wick", "wood"]
_STATES = ["AL", "AZ", "CA", "CO", "FL", "GA", "IL", "MA", "MI", "NJ", "NY", "OH", "OR", "PA", "TX", "WA"]

_COMMON = (
    "the a this that and but with from about after before again really just "
    "coffee morning train bus park game music team rain sunny street corner "
    "friend weekend show movie dinner lunch pizza garden library school "
    "happy great sad awful terrible joy lonely fight job boss cash rent "
    "night midnight dark smash punch disappointed regret tears proud"
).split()

_TARGETED_TEMPLATES = [
    "you {slur} should get out of {city} for good",
    "those {slur} ruin everything they touch around here",
    "another {slur} moved in next door and it makes me angry",
    "keep the {slur} away from our jobs they are the worst",
    "sick of these {slur} and their attack on our way of life",
    "somebody should fight back against the {slur} tonight",
]

_SELF_TEMPLATES = [
    "my boss called me a {slur} today and i feel sick about it",
    "i got shoved at the station and called a {slur} i am still shaking",
    "we were refused service because they said we looked like {slur}",
    "i keep crying after my landlord wrote {slur} on our door",
    "my sister and i heard {slur} yelled at us from a car tonight",
]

_QUOTED_NEGATIVE_TEMPLATES = [
    "the mayor condemned the attacks on {slur} downtown this week",
    "report says slurs like {slur} rose sharply online last year",
]

_NEGATIVE_TEMPLATES = [
    "the coffee near the {noun} was great this morning",
    "our team lost again but the game was wonderful anyway",
    "long shift at the office then rent and bills are due",
    "happy about the rain finally stopping over {city}",
    "meeting ran late so dinner was just cold pizza",
    "she said the movie made her cry at midnight",
    "they opened a new library on the north side of {city}",
    "broke until payday but the park was lovely tonight",
    "you should see the garden by the river in spring",
    "he walked the dog past the quarry before dark",
]


def _slug(name: str, state: str) -> str:
    return f"{name.lower().replace(' ', '-')}-{state.lower()}"


def _city_names(n: int, rng: np.random.Generator) -> list[tuple[str, str]]:
    combos = [(p + s, st) for p in _PREFIXES for s in _SUFFIXES for st in _STATES]
    idx = rng.choice(len(combos), size=n, replace=False)
    return [combos[i] for i in sorted(idx)]


def generate_fixture(dest: str | Path, seed: int = DEFAULT_SEED, n_cities: int = 100,
                     n_records: int = 6000) -> dict:
    """Write the full fixture tree under dest; returns summary counts."""
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    (dest / "bots").mkdir(exist_ok=True)
    rng = np.random.default_rng(seed)

    cities = _city_names(n_cities, rng)
    keys = [_slug(name, st) for name, st in cities]

    # per-city discrimination rate and targeted share drive everything else
    rates = rng.uniform(0.02, 0.22, size=n_cities)
    targeted_share = rng.uniform(0.25, 0.95, size=n_cities)
    density = rng.uniform(900, 12000, size=n_cities)
    income = rng.uniform(35000, 95000, size=n_cities)

    # hate crimes loosely follow the planted discrimination signal; the +rank
    # term makes every count distinct so quartile buckets are tie-free
    base = 4.0 + 420.0 * rates * targeted_share + density / 4000.0
    order = np.argsort(np.argsort(base))
    crimes = (np.round(base) * 3 + order).astype(int)

    registry_rows = []
    rename_alias_cities = set(range(0, n_cities, 9))
    for i, ((name, st), key) in enumerate(zip(cities, keys)):
        aliases = [f"{name}, {st}", f"{name} {st}"]
        if i in rename_alias_cities:
            aliases.append(f"Old {name}, {st}")  # historical label, same city
        registry_rows.append({
            "city_key": key,
            "aliases": "|".join(aliases),
            "hate_crimes": int(crimes[i]),
            "pct_white": round(float(rng.uniform(40, 80)), 1),
            "pct_black": round(float(rng.uniform(4, 30)), 1),
            "pct_asian": round(float(rng.uniform(2, 18)), 1),
            "pct_hispanic_latino": round(float(rng.uniform(5, 30)), 1),
            "pct_foreign_born": round(float(rng.uniform(4, 35)), 1),
            "pct_female": round(float(rng.uniform(48, 53)), 1),
            "pct_age_18_64": round(float(rng.uniform(55, 70)), 1),
            "population_density": round(float(density[i]), 1),
            "median_income": round(float(income[i]), 0),
            "lat": round(float(rng.uniform(25.5, 47.5)), 4),
            "lon": round(float(rng.uniform(-122.5, -71.5)), 4),
        })
    registry_cols = list(registry_rows[0].keys())
    with open(dest / "registry.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=registry_cols, lineterminator="\n")
        writer.writeheader()
        writer.writerows(registry_rows)

    # record allocation per city, then per-record construction
    weights = rng.uniform(0.5, 1.8, size=n_cities)
    alloc = rng.multinomial(n_records, weights / weights.sum())
    records: list[dict] = []
    labels: list[tuple[str, int]] = []
    disc_users_by_city: dict[str, set[str]] = {k: set() for k in keys}
    rec_no = 0
    heavy_cities = sorted(range(n_cities), key=lambda i: -alloc[i])[:3]

    def new_text(positive: bool, city_label: str) -> str:
        if positive:
            if rng.random() < 0.35:
                template = _SELF_TEMPLATES[int(rng.integers(len(_SELF_TEMPLATES)))]
            else:
                template = _TARGETED_TEMPLATES[int(rng.integers(len(_TARGETED_TEMPLATES)))]
            pool = SLUR_SINGLE + SLUR_MULTI
            slur = pool[int(rng.integers(len(pool)))]
            text = template.format(slur=slur, city=city_label)
        else:
            template = _NEGATIVE_TEMPLATES[int(rng.integers(len(_NEGATIVE_TEMPLATES)))]
            noun = _COMMON[int(rng.integers(len(_COMMON)))]
            text = template.format(noun=noun, city=city_label)
        filler = rng.integers(0, 4)
        if filler:
            extra = " ".join(_COMMON[int(j)] for j in rng.integers(0, len(_COMMON), filler))
            text = f"{text} {extra}"
        return text

    for i, ((name, st), key) in enumerate(zip(cities, keys)):
        n_c = int(alloc[i])
        if n_c == 0:
            continue
        n_pos = max(1, round(rates[i] * n_c))
        n_users = max(2, n_c // 3)
        user_pool = [f"u{i:03d}x{j:03d}" for j in range(n_users)]
        heavy_user = f"heavy{i:03d}" if i in heavy_cities else None
        aliases = registry_rows[i]["aliases"].split("|")
        for j in range(n_c):
            positive = j < n_pos
            if positive and heavy_user is not None and rng.random() < 0.6:
                uid = heavy_user
            else:
                uid = user_pool[int(rng.integers(n_users))]
            year = int(rng.integers(2011, 2017))
            month = int(rng.integers(1, 13))
            day = int(rng.integers(1, 28))
            hour = int(rng.integers(0, 24))
            place = aliases[int(rng.integers(len(aliases)))]
            rid = f"r{rec_no:05d}"
            rec_no += 1
            pos_flag = positive
            if positive and rng.random() < 0.02:
                # a few benign mentions of the planted terms, labeled negative
                text = _QUOTED_NEGATIVE_TEMPLATES[int(rng.integers(len(_QUOTED_NEGATIVE_TEMPLATES)))].format(
                    slur=SLUR_SINGLE[int(rng.integers(len(SLUR_SINGLE)))]
                )
                pos_flag = False
            else:
                text = new_text(positive, f"{name}")
            records.append({
                "id": rid,
                "text": text,
                "created_at": f"{year:04d}-{month:02d}-{day:02d}T{hour:02d}:00:00Z",
                "place": place,
                "user_id": uid,
            })
            labels.append((rid, 1 if pos_flag else 0))
            if pos_flag:
                disc_users_by_city[key].add(uid)

    # shuffle output order, then append adversarial lines the ingester must
    # handle: unknown places, out-of-window stamps, malformed JSON, a dup id
    perm = rng.permutation(len(records))
    lines = [json.dumps(records[int(p)], sort_keys=True) for p in perm]
    extras = []
    for j in range(5):
        extras.append(json.dumps({
            "id": f"x-unmatched-{j}", "text": "no such place here",
            "created_at": "2014-06-01T10:00:00Z", "place": "Nowhere, ZZ",
            "user_id": "u-none",
        }, sort_keys=True))
    for j in range(5):
        extras.append(json.dumps({
            "id": f"x-late-{j}", "text": "posted after the study window",
            "created_at": "2018-01-05T10:00:00Z", "place": registry_rows[0]["aliases"].split("|")[0],
            "user_id": "u-late",
        }, sort_keys=True))
    extras.append('{"id": "x-broken", "text": "truncated line...')
    extras.append(json.dumps({"id": "x-nofield", "text": "missing place and user",
                              "created_at": "2013-03-03T03:00:00Z"}, sort_keys=True))
    extras.append(json.dumps(dict(records[0], text="duplicate id line"), sort_keys=True))
    with open(dest / "records.ndjson", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines + extras) + "\n")

    with open(dest / "labels.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "label"])
        writer.writerows(sorted(labels))

    # keyword lexicon: active planted terms plus rows the filter must drop
    with open(dest / "lexicon.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["phrase", "sightings", "nationality_ethnicity", "english", "excluded"])
        for term in SLUR_SINGLE + SLUR_MULTI:
            writer.writerow([term, int(rng.integers(20, 400)), "true", "true", "false"])
        for phrase, sightings, nat, eng, exc in LEXICON_EXTRA:
            writer.writerow([phrase, sightings, str(nat).lower(), str(eng).lower(), str(exc).lower()])

    (dest / "categories.txt").write_text("\n".join(CATEGORY_LINES) + "\n", encoding="utf-8")

    # seven bot lists; one high-bot city gets ~30% of its discrimination
    # posters listed, the rest of the ids come from benign-only users so
    # other cities keep a bot share near zero
    all_users = sorted({r["user_id"] for r in records})
    disc_users_all = set().union(*disc_users_by_city.values())
    high_bot_city = keys[heavy_cities[0]]
    high_bot_users = sorted(disc_users_by_city[high_bot_city])
    n_high = max(1, int(0.3 * len(high_bot_users)))
    chosen_bots = set(high_bot_users[:n_high])
    benign_only = [u for u in all_users if u not in disc_users_all]
    extra_idx = rng.choice(len(benign_only), size=min(60, len(benign_only)), replace=False)
    chosen_bots |= {benign_only[int(i)] for i in extra_idx}
    bot_list = sorted(chosen_bots)
    manifest_rows = []
    for li in range(7):
        chunk = bot_list[li::7]
        name = f"list{li + 1}.txt"
        (dest / "bots" / name).write_text("\n".join(chunk) + ("\n" if chunk else ""),
                                          encoding="utf-8")
        # manifest paths resolve relative to the manifest's own directory
        manifest_rows.append([f"source-{li + 1}", name, f"collected 201{1 + li % 6}"])
    with open(dest / "bots" / "manifest.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["source", "path", "period_note"])
        writer.writerows(manifest_rows)

    # gold test tasks for the annotation service
    with open(dest / "test_tasks.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["task_id", "text", "gold"])
        for j in range(6):
            writer.writerow([f"gold-pos-{j}", new_text(True, "Fairview"), "discrimination"])
            writer.writerow([f"gold-neg-{j}", new_text(False, "Fairview"), "no_discrimination"])

    config_text = f"""seed: 7
out_dir: out
paths:
  records: records.ndjson
  registry: registry.csv
  lexicon: lexicon.csv
  categories: categories.txt
  bot_manifest: bots/manifest.csv
  test_tasks: test_tasks.csv
  labels: labels.csv
window:
  start: 2011-01-01T00:00:00Z
  end: 2016-12-31T23:59:59Z
classifier:
  orders: [1, 2, 3]
  buckets: 2097152
  dim: 10
  epochs: 5
  learning_rate: 0.1
  threshold: auto
  k_folds: 10
lexicon_filter:
  min_sightings: 10
  require_discrimination: true
trainset:
  max_matched: 150
  positive_share: 0.12
active_learning:
  fraction: 0.05
  epsilon: 0.002
  max_iterations: 4
annotation:
  min_judgments: 2
  test_rate: 10
report:
  regression_measure: proportion
  exclude_cities: [{keys[0]}, {keys[1]}]
  bucket_fractions: [0.25, 0.5, 0.25]
  top_k_features: 20
drop_bots: false
"""
    (dest / "config.yaml").write_text(config_text, encoding="utf-8")

    return {
        "cities": n_cities,
        "records": len(records),
        "extra_lines": len(extras),
        "positives": sum(lbl for _, lbl in labels),
        "bot_ids": len(bot_list),
        "high_bot_city": high_bot_city,
    }
