"""Result emission: map data, regression tables, feature rankings, figures.

Map data is a GeoJSON FeatureCollection with rank-based color buckets (lowest
quarter green, middle half yellow, top quarter red by default) for hate-crime
counts and discrimination rate, dot-size fields, and an underline flag where
targeted discrimination exceeds half.  Figures are static PNGs rendered with
the Agg backend so runs are headless and byte-reproducible.
"""

from __future__ import annotations

import warnings
from collections import Counter
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .aggregate import CityAggregate
from .classifier import ClassifierModel, hash_ngram
from .corpus import CityRegistry
from .delineate import SELF_NARRATION
from .stats import ttest_two_sample
from .tokenize import ngrams, tokenize

COLORS = ("green", "yellow", "red")
_DRAW_COLORS = {"green": "#2a9d38", "yellow": "#e3b505", "red": "#cc2936"}


def quartile_buckets(
    values: dict[str, float], fractions: tuple[float, float, float] = (0.25, 0.5, 0.25)
) -> dict[str, str]:
    """Rank-based color classes; ties resolve by (value, city_key) order."""
    n = len(values)
    ordered = sorted(values.items(), key=lambda kv: (kv[1], kv[0]))
    n_green = round(fractions[0] * n)
    n_red = round(fractions[2] * n)
    n_yellow = n - n_green - n_red
    out: dict[str, str] = {}
    for i, (key, _) in enumerate(ordered):
        if i < n_green:
            out[key] = "green"
        elif i < n_green + n_yellow:
            out[key] = "yellow"
        else:
            out[key] = "red"
    return out


def emit_map_data(
    aggs: list[CityAggregate],
    registry: CityRegistry,
    fractions: tuple[float, float, float] = (0.25, 0.5, 0.25),
) -> dict:
    crimes = {a.city_key: float(a.hate_crime_count) for a in aggs}
    rates = {a.city_key: a.discrimination_rate for a in aggs}
    crime_color = quartile_buckets(crimes, fractions)
    rate_color = quartile_buckets(rates, fractions)
    features = []
    for a in sorted(aggs, key=lambda x: x.city_key):
        rec = registry.records[a.city_key]
        if rec.coord is None:
            warnings.warn(f"no coordinates for {a.city_key}; feature has null geometry",
                          stacklevel=2)
            geometry = None
        else:
            lat, lon = rec.coord
            geometry = {"type": "Point", "coordinates": [lon, lat]}
        features.append({
            "type": "Feature",
            "geometry": geometry,
            "properties": {
                "city_key": a.city_key,
                "hate_crimes": a.hate_crime_count,
                "discrimination_rate": a.discrimination_rate,
                "targeted_proportion": a.targeted_proportion,
                "tweets_per_user": a.tweets_per_user,
                "bot_share": a.bot_share,
                "color_hate_crimes": crime_color[a.city_key],
                "color_discrimination_rate": rate_color[a.city_key],
                "dot_size_rate": a.discrimination_rate,
                "dot_size_tweets_per_user": a.tweets_per_user,
                "underline": a.targeted_proportion > 0.5,
            },
        })
    return {"type": "FeatureCollection", "features": features}


def aggregate_rows(aggs: list[CityAggregate], registry: CityRegistry) -> tuple[list[str], list[list]]:
    cols = [
        "city_key", "total_records", "discrimination_records", "targeted",
        "self_narration", "unique_discrimination_users", "discrimination_rate",
        "targeted_proportion", "targeted_self_ratio", "tweets_per_user",
        "bot_share", "hate_crimes", "pct_white", "pct_black", "pct_asian",
        "pct_hispanic_latino", "pct_foreign_born", "pct_female",
        "pct_age_18_64", "population_density", "median_income",
    ]
    rows = []
    for a in sorted(aggs, key=lambda x: x.city_key):
        c = registry.records[a.city_key].census
        rows.append([
            a.city_key, a.total_records, a.discrimination_records, a.targeted,
            a.self_narration, a.unique_discrimination_users, a.discrimination_rate,
            a.targeted_proportion, a.targeted_self_ratio, a.tweets_per_user,
            a.bot_share, a.hate_crime_count, c.pct_white, c.pct_black, c.pct_asian,
            c.pct_hispanic_latino, c.pct_foreign_born, c.pct_female,
            c.pct_age_18_64, c.population_density, c.median_income,
        ])
    return cols, rows


# -- predictive-feature reporting --------------------------------------


def bucket_names(texts: list[str], model: ClassifierModel) -> dict[int, str]:
    """Most frequent n-gram string per hash bucket over the given texts."""
    counts: Counter[tuple[int, str]] = Counter()
    cfg = model.config
    for text in texts:
        toks = tokenize(text)
        for gram in ngrams(toks, tuple(sorted(cfg.orders))):
            counts[(hash_ngram(gram, cfg.buckets), gram)] += 1
    best: dict[int, tuple[int, str]] = {}
    for (bucket, gram), cnt in counts.items():
        cur = best.get(bucket)
        # higher count wins, then lexicographically smaller string
        if cur is None or (-cnt, gram) < (-cur[0], cur[1]):
            best[bucket] = (cnt, gram)
    return {bucket: gram for bucket, (cnt, gram) in best.items()}


def top_features(
    model: ClassifierModel,
    texts_by_city: dict[str, list[tuple[str, str]]],  # city -> [(text, delineation)]
    k: int = 20,
) -> tuple[list[dict], dict[str, list[dict]]]:
    """Global top-k features by model contribution, plus per-city presence.

    Contribution of bucket r is dot(embedding_row_r, output_weights): the
    score push a record gets from containing that feature.  Buckets never seen
    in the supplied records render as `bucket:<id>`.
    """
    all_texts = [t for pairs in texts_by_city.values() for t, _ in pairs]
    names = bucket_names(all_texts, model)
    contrib = sorted(
        ((float(model.w @ row), bucket) for bucket, row in model.rows.items()),
        key=lambda cb: (-cb[0], cb[1]),
    )
    global_rows = []
    top = contrib[:k]
    for rank, (weight, bucket) in enumerate(top, start=1):
        if bucket not in names:
            warnings.warn(f"bucket {bucket} has no recorded n-gram string", stacklevel=2)
        global_rows.append({
            "rank": rank,
            "bucket": bucket,
            "feature": names.get(bucket, f"bucket:{bucket}"),
            "weight": weight,
        })
    per_city: dict[str, list[dict]] = {}
    cfg = model.config
    for city, pairs in sorted(texts_by_city.items()):
        bucket_hits_targeted: Counter[int] = Counter()
        bucket_hits_self: Counter[int] = Counter()
        for text, delineation in pairs:
            grams = ngrams(tokenize(text), tuple(sorted(cfg.orders)))
            buckets = {hash_ngram(g, cfg.buckets) for g in grams}
            tally = bucket_hits_self if delineation == SELF_NARRATION else bucket_hits_targeted
            for bkt in buckets:
                tally[bkt] += 1
        rows = []
        for rank, (weight, bucket) in enumerate(top, start=1):
            n_targeted = bucket_hits_targeted.get(bucket, 0)
            n_self = bucket_hits_self.get(bucket, 0)
            if n_targeted + n_self == 0:
                continue
            rows.append({
                "rank": rank,
                "feature": names.get(bucket, f"bucket:{bucket}"),
                "weight": weight,
                "records_targeted": n_targeted,
                "records_self_narration": n_self,
            })
        per_city[city] = rows
    return global_rows, per_city


def feature_stability(
    model: ClassifierModel,
    texts_by_year: dict[int, list[str]],
    k: int = 20,
) -> list[dict]:
    """t-test of top-feature usage shares between consecutive years.

    For each year, the share of records containing each of the model's top-k
    features forms a vector; consecutive year pairs are compared with a
    two-sample t-test.  p > 0.05 throughout reads as stable usage.
    """
    contrib = sorted(
        ((float(model.w @ row), bucket) for bucket, row in model.rows.items()),
        key=lambda cb: (-cb[0], cb[1]),
    )
    top_buckets = [bucket for _, bucket in contrib[:k]]
    cfg = model.config
    shares: dict[int, list[float]] = {}
    for year, texts in texts_by_year.items():
        hits = Counter()
        for text in texts:
            grams = ngrams(tokenize(text), tuple(sorted(cfg.orders)))
            for bkt in {hash_ngram(g, cfg.buckets) for g in grams}:
                hits[bkt] += 1
        n = max(len(texts), 1)
        shares[year] = [hits.get(b, 0) / n for b in top_buckets]
    rows = []
    for year in sorted(shares)[:-1]:
        nxt = year + 1
        if nxt not in shares:
            continue
        try:
            t, p = ttest_two_sample(shares[year], shares[nxt])
        except ValueError:
            warnings.warn(f"degenerate feature shares for {year}/{nxt}", stacklevel=2)
            t, p = 0.0, 1.0
        rows.append({"year_a": year, "year_b": nxt, "t": t, "p": p})
    return rows


# -- figures ------------------------------------------------------------

_PNG_META = {"Software": None}  # strip the writer tag so reruns are byte-identical


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="png", dpi=110, metadata=_PNG_META)
    plt.close(fig)


def render_figures(
    out_dir: str | Path,
    aggs: list[CityAggregate],
    registry: CityRegistry,
    map_data: dict,
    history_rows: list[dict],
    global_features: list[dict],
) -> list[str]:
    """Render the standard figure set into out_dir; returns the filenames."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    for metric, color_key in (
        ("hate_crimes", "color_hate_crimes"),
        ("discrimination_rate", "color_discrimination_rate"),
    ):
        fig, ax = plt.subplots(figsize=(8, 5))
        for feat in map_data["features"]:
            if feat["geometry"] is None:
                continue
            lon, lat = feat["geometry"]["coordinates"]
            props = feat["properties"]
            size = 18.0 + 400.0 * props["discrimination_rate"]
            ax.scatter(lon, lat, s=size, c=_DRAW_COLORS[props[color_key]],
                       edgecolors="black" if props["underline"] else "none",
                       linewidths=0.8, alpha=0.85)
        ax.set_xlabel("longitude")
        ax.set_ylabel("latitude")
        ax.set_title(f"cities by {metric.replace('_', ' ')} (black edge: mostly targeted)")
        name = f"map_{metric}.png"
        _save(fig, out_dir / name)
        written.append(name)

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.hist([a.discrimination_rate for a in aggs], bins=20, color="#4a6fa5")
    ax.set_xlabel("discrimination rate")
    ax.set_ylabel("cities")
    ax.set_title("per-city discrimination rate")
    _save(fig, out_dir / "rate_histogram.png")
    written.append("rate_histogram.png")

    if history_rows:
        fig, ax = plt.subplots(figsize=(7, 4))
        iterations = [int(r["iteration"]) for r in history_rows]
        ax.plot(iterations, [float(r["mean_f1"]) for r in history_rows],
                marker="o", label="mean F1")
        ax.plot(iterations, [float(r["mean_auc"]) for r in history_rows],
                marker="s", label="mean AUC")
        ax.set_xlabel("iteration")
        ax.set_ylabel("score")
        ax.set_title("labeling-loop learning curve")
        ax.legend()
        _save(fig, out_dir / "learning_curve.png")
        written.append("learning_curve.png")

    if global_features:
        fig, ax = plt.subplots(figsize=(7, 5))
        feats = global_features[::-1]
        ax.barh([f["feature"] for f in feats], [f["weight"] for f in feats],
                color="#4a6fa5")
        ax.set_xlabel("model contribution")
        ax.set_title("top predictive features")
        fig.tight_layout()
        _save(fig, out_dir / "top_features.png")
        written.append("top_features.png")

    return written
