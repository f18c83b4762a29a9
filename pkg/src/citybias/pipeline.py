"""Stage orchestration: each stage reads upstream artifacts, writes its own.

Stages run in a fixed order; every artifact carries the pipeline version and
config hash in its header so resumed runs can verify they are continuing the
same configuration.  `run_all(cfg, start=...)` skips stages before `start`,
re-reading their artifacts instead.

Stage order:
    ingest -> trainset -> train -> active-learn -> classify -> lexical
           -> botscan -> aggregate -> regress -> map -> features -> figures

Delineation happens inside the classify stage (one pass over the records);
there is no separate artifact for it beyond the columns it appends.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import artifacts
from .active_learning import (
    HistoryRow,
    LoopResult,
    PoolRecord,
    fixture_label_source,
    run_active_loop,
)
from .aggregate import (
    ClassifiedRecord,
    aggregate_cities,
    check_aggregate_identity,
)
from .botfilter import bot_union, city_bot_shares, load_bot_lists
from .classifier import (
    ClassifierModel,
    EvalReport,
    LabeledExample,
    TrainConfig,
    kfold_evaluate,
    select_threshold,
    train,
)
from .config import PipelineConfig
from .corpus import (
    CityRegistry,
    TextRecord,
    ingest_corpus,
    load_city_registry,
    read_record_json,
    record_to_json,
)
from .delineate import delineate
from .errors import ConfigError, InvariantViolation, StageError
from .lexical import (
    CategoryScorer,
    group_ratio,
    load_categories,
    mean_profile,
    user_profiles,
    volume_bucket,
)
from .lexicon import PhraseMatcher, filter_lexicon, load_lexicon
from .report import (
    aggregate_rows,
    emit_map_data,
    feature_stability,
    render_figures,
    top_features,
)
from .stats import DesignMatrix, RegressionFit, StepwiseTrace, fit_negbin, stepwise_backward
from .tokenize import tokenize

STAGES = (
    "ingest",
    "trainset",
    "train",
    "active-learn",
    "classify",
    "lexical",
    "botscan",
    "aggregate",
    "regress",
    "map",
    "features",
    "figures",
)

CENSUS_COVARIATES = (
    "pct_white",
    "pct_black",
    "pct_asian",
    "pct_hispanic_latino",
    "pct_foreign_born",
    "pct_female",
    "pct_age_18_64",
    "population_density",
    "median_income",
)

HISTORY_COLUMNS = ["iteration", "train_size", "positives", "mean_f1", "mean_auc", "threshold"]


def stage_index(name: str) -> int:
    try:
        return STAGES.index(name)
    except ValueError:
        raise ConfigError(f"unknown stage {name!r}; one of {', '.join(STAGES)}") from None


def short_sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


@dataclass
class PipelineState:
    """Carries loaded inputs and intermediate results between stages."""

    cfg: PipelineConfig
    registry: CityRegistry | None = None
    registry_errors: list = field(default_factory=list)
    matched: list[tuple[TextRecord, str]] = field(default_factory=list)
    train_set: list[LabeledExample] = field(default_factory=list)
    pool: list[PoolRecord] = field(default_factory=list)
    labels: dict[str, int] = field(default_factory=dict)
    model: ClassifierModel | None = None
    history: list[HistoryRow] = field(default_factory=list)
    classified: list[dict] = field(default_factory=list)
    bot_ids: frozenset[str] = frozenset()
    aggregates: list = field(default_factory=list)
    features_global: list[dict] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)


def _out(cfg: PipelineConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_registry(state: PipelineState) -> CityRegistry:
    if state.registry is None:
        registry, errors = load_city_registry(state.cfg.registry_path)
        state.registry = registry
        state.registry_errors = errors
    return state.registry


def _load_labels(state: PipelineState) -> dict[str, int]:
    if not state.labels:
        path = state.cfg.labels_path
        if path is None:
            raise ConfigError("paths.labels is required for the training stages")
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                state.labels[row["id"]] = int(row["label"])
    return state.labels


# -- stage: ingest ------------------------------------------------------


def stage_ingest(state: PipelineState) -> None:
    cfg = state.cfg
    out = _out(cfg)
    registry = _load_registry(state)
    result = ingest_corpus(cfg.records_path, registry, window=cfg.window())
    state.matched = result.pairs

    with open(out / "matched.ndjson", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"artifact": "matched", "version": artifacts.__version__,
                             "config": cfg.hash()}, sort_keys=True) + "\n")
        for rec, city_key in result.pairs:
            fh.write(record_to_json(rec, city_key) + "\n")

    rejects = list(state.registry_errors) + result.rejects
    artifacts.write_csv(out / "rejects.csv", ["line_number", "reason"], rejects,
                        config_hash=cfg.hash())

    stats = result.stats
    if not stats.check_partition():
        raise InvariantViolation("matched + unmatched + rejected != total")
    artifacts.write_json(out / "ingest_stats.json", {
        "total": stats.total,
        "matched": stats.matched,
        "unmatched": stats.unmatched,
        "out_of_window": stats.out_of_window,
        "rejected": stats.rejected,
        "registry_rows_dropped": len(state.registry_errors),
        "ambiguous_aliases": sorted(registry.ambiguous_aliases),
    }, config_hash=cfg.hash())


def _read_matched(state: PipelineState) -> list[tuple[TextRecord, str]]:
    if not state.matched:
        path = _out(state.cfg) / "matched.ndjson"
        if not path.exists():
            raise StageError("resume", f"missing artifact {path}; run the ingest stage first")
        with open(path, encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            artifacts.check_hash(path, header.get("config", ""), state.cfg.hash())
            state.matched = [read_record_json(line) for line in fh if line.strip()]
    return state.matched


# -- stage: trainset ----------------------------------------------------


def stage_trainset(state: PipelineState) -> None:
    """Seed training set: keyword-matched records plus balancing negatives.

    Keyword hits against the filtered lexicon form the candidate positives;
    negatives are drawn uniformly from the unmatched remainder until the
    labeled positives sit near the configured share.  Everything not in the
    seed set becomes the labeling-loop pool.
    """
    cfg = state.cfg
    out = _out(cfg)
    pairs = _read_matched(state)
    labels = _load_labels(state)

    entries = load_lexicon(cfg.lexicon_path)
    active = filter_lexicon(
        entries,
        min_sightings=cfg.lexicon_filter.min_sightings,
        require_discrimination=cfg.lexicon_filter.require_discrimination,
    )
    matcher = PhraseMatcher([e.phrase for e in active])

    matched_ids = []
    unmatched_ids = []
    for rec, _ in pairs:
        if matcher.find(tokenize(rec.text)):
            matched_ids.append(rec.id)
        else:
            unmatched_ids.append(rec.id)

    ts = cfg.trainset
    rng = np.random.default_rng([cfg.seed, 0x5EED])
    take_matched = list(matched_ids)
    if len(take_matched) > ts.max_matched:
        idx = rng.choice(len(take_matched), size=ts.max_matched, replace=False)
        take_matched = [take_matched[int(i)] for i in sorted(idx)]

    n_pos = sum(labels.get(rid, 0) for rid in take_matched)
    if n_pos == 0:
        raise StageError("trainset", "no labeled positives among keyword-matched records")
    want_total = max(len(take_matched), int(round(n_pos / ts.positive_share)))
    need_neg = max(0, want_total - len(take_matched))
    neg_candidates = [rid for rid in unmatched_ids if labels.get(rid, 0) == 0]
    if need_neg > len(neg_candidates):
        warnings.warn("not enough negatives to reach the configured positive share")
        need_neg = len(neg_candidates)
    if need_neg:
        idx = rng.choice(len(neg_candidates), size=need_neg, replace=False)
        chosen_neg = [neg_candidates[int(i)] for i in sorted(idx)]
    else:
        chosen_neg = []

    seed_ids = set(take_matched) | set(chosen_neg)
    by_id = {rec.id: rec for rec, _ in pairs}
    state.train_set = [
        LabeledExample(text=by_id[rid].text, label=labels.get(rid, 0),
                       confidence=1.0, provenance="seed")
        for rid in sorted(seed_ids)
    ]
    state.pool = [PoolRecord(id=rec.id, text=rec.text)
                  for rec, _ in pairs if rec.id not in seed_ids]

    artifacts.write_csv(out / "trainset.csv",
                        ["id", "label", "provenance"],
                        [[rid, labels.get(rid, 0), "seed"] for rid in sorted(seed_ids)],
                        config_hash=cfg.hash())
    artifacts.write_csv(out / "pool.csv", ["id"],
                        [[p.id] for p in state.pool],
                        config_hash=cfg.hash())


def _read_trainset(state: PipelineState) -> None:
    if state.train_set:
        return
    cfg = state.cfg
    out = _out(cfg)
    pairs = _read_matched(state)
    by_id = {rec.id: rec for rec, _ in pairs}
    path = out / "trainset.csv"
    if not path.exists():
        raise StageError("resume", f"missing artifact {path}; run the trainset stage first")
    found, rows = artifacts.read_csv(path)
    artifacts.check_hash(path, found, cfg.hash())
    seed_ids = set()
    train_set = []
    for row in rows:
        rid = row["id"]
        if rid not in by_id:
            raise StageError("resume", f"trainset id {rid} not in matched records")
        seed_ids.add(rid)
        train_set.append(LabeledExample(text=by_id[rid].text, label=int(row["label"]),
                                        confidence=1.0, provenance=row["provenance"]))
    state.train_set = train_set
    state.pool = [PoolRecord(id=rec.id, text=rec.text)
                  for rec, _ in pairs if rec.id not in seed_ids]


def _train_config(cfg: PipelineConfig, threshold: float) -> TrainConfig:
    c = cfg.classifier
    return TrainConfig(orders=tuple(c.orders), buckets=c.buckets, dim=c.dim,
                       epochs=c.epochs, learning_rate=c.learning_rate,
                       seed=cfg.seed, threshold=threshold)


# -- stage: train -------------------------------------------------------


def stage_train(state: PipelineState) -> None:
    cfg = state.cfg
    out = _out(cfg)
    _read_trainset(state)

    tc = _train_config(cfg, 0.5)
    report = kfold_evaluate(state.train_set, cfg.classifier.k_folds, tc)
    if cfg.classifier.threshold == "auto":
        threshold = select_threshold(report.oof_scores)
    else:
        threshold = float(cfg.classifier.threshold)
    tc = _train_config(cfg, threshold)
    model = train(state.train_set, tc)
    state.model = model

    model.save(out / "model_initial.bin")
    artifacts.write_json(out / "eval_initial.json", {
        "folds": report.to_dict(),
        "threshold": threshold,
        "train_size": len(state.train_set),
        "positives": sum(ex.label for ex in state.train_set),
    }, config_hash=cfg.hash())


# -- stage: active-learn ------------------------------------------------


def stage_active_learn(state: PipelineState) -> None:
    cfg = state.cfg
    out = _out(cfg)
    _read_trainset(state)
    labels = _load_labels(state)

    if cfg.classifier.threshold == "auto":
        path = out / "eval_initial.json"
        if not path.exists():
            raise StageError("resume", f"missing artifact {path}; run the train stage first")
        eval_initial = artifacts.read_json(path)
        artifacts.check_hash(path, eval_initial["_pipeline"]["config"], cfg.hash())
        threshold = float(eval_initial["threshold"])
    else:
        threshold = float(cfg.classifier.threshold)

    tc = _train_config(cfg, threshold)
    result: LoopResult = run_active_loop(
        state.train_set,
        state.pool,
        fixture_label_source(labels),
        tc,
        k=cfg.classifier.k_folds,
        fraction=cfg.active_learning.fraction,
        epsilon=cfg.active_learning.epsilon,
        max_iterations=cfg.active_learning.max_iterations,
    )
    state.model = result.model
    state.history = result.history
    state.train_set = result.train_set

    result.model.save(out / "model.bin")
    artifacts.write_csv(out / "active_history.csv", HISTORY_COLUMNS,
                        [[r.iteration, r.train_size, r.positives,
                          r.mean_f1, r.mean_auc, r.threshold] for r in result.history],
                        config_hash=cfg.hash())
    artifacts.write_json(out / "loop_meta.json", {
        "status": result.status,
        "iterations": len(result.history) - 1,
        "final_train_size": len(result.train_set),
        "provenance_counts": _provenance_counts(result.train_set),
    }, config_hash=cfg.hash())
    artifacts.write_csv(out / "trainset_final.csv",
                        ["text_sha", "label", "provenance"],
                        [[short_sha(ex.text), ex.label, ex.provenance]
                         for ex in result.train_set],
                        config_hash=cfg.hash())


def _provenance_counts(examples: list[LabeledExample]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for ex in examples:
        counts[ex.provenance] = counts.get(ex.provenance, 0) + 1
    return dict(sorted(counts.items()))


def _load_model(state: PipelineState) -> ClassifierModel:
    if state.model is None:
        path = _out(state.cfg) / "model.bin"
        if not path.exists():
            raise StageError("resume", f"missing artifact {path}; run the active-learn stage first")
        state.model = ClassifierModel.load(path)
    return state.model


# -- stage: classify (+ delineate) --------------------------------------


def stage_classify(state: PipelineState) -> None:
    cfg = state.cfg
    out = _out(cfg)
    pairs = _read_matched(state)
    model = _load_model(state)

    rows = []
    for rec, city_key in pairs:
        score = float(model.predict(rec.text))
        is_disc = bool(score >= model.threshold)
        delineation = delineate(rec.text, cfg.pronouns) if is_disc else ""
        rows.append({
            "id": rec.id,
            "city_key": city_key,
            "user_id": rec.user_id,
            "year": rec.timestamp.year,
            "score": round(score, 10),
            "is_discrimination": is_disc,
            "delineation": delineation,
        })
    state.classified = rows
    artifacts.write_ndjson(out / "classified.ndjson", "classified", rows,
                           config_hash=cfg.hash())


def _read_classified(state: PipelineState) -> list[dict]:
    if not state.classified:
        path = _out(state.cfg) / "classified.ndjson"
        if not path.exists():
            raise StageError("resume", f"missing artifact {path}; run the classify stage first")
        header, rows = artifacts.read_ndjson(path)
        artifacts.check_hash(path, header.get("config", ""), state.cfg.hash())
        state.classified = rows
    return state.classified


# -- stage: lexical ------------------------------------------------------


def stage_lexical(state: PipelineState) -> None:
    cfg = state.cfg
    out = _out(cfg)
    pairs = _read_matched(state)
    classified = {row["id"]: row for row in _read_classified(state)}
    lexicons = load_categories(cfg.categories_path)
    scorer = CategoryScorer(lexicons)
    names = scorer.names

    disc_texts: list[str] = []
    other_texts: list[str] = []
    disc_texts_by_user: dict[str, list[str]] = {}
    for rec, _ in pairs:
        if classified[rec.id]["is_discrimination"]:
            disc_texts.append(rec.text)
            disc_texts_by_user.setdefault(rec.user_id, []).append(rec.text)
        else:
            other_texts.append(rec.text)

    profile_rows = []
    if disc_texts:
        mean_disc = mean_profile(disc_texts, scorer)
        profile_rows.append(["discrimination"] + [mean_disc[n] for n in names])
    if other_texts:
        mean_other = mean_profile(other_texts, scorer)
        profile_rows.append(["other"] + [mean_other[n] for n in names])
    artifacts.write_csv(out / "lexical_profiles.csv", ["group"] + list(names),
                        profile_rows, config_hash=cfg.hash())

    ratio_rows = []
    if disc_texts and other_texts:
        ratios, grand = group_ratio(disc_texts, other_texts, lexicons)
        for name in names:
            r = ratios[name]
            ratio_rows.append([name, "undefined" if r is None else r])
        ratio_rows.append(["__grand_mean__", "undefined" if grand is None else grand])
    artifacts.write_csv(out / "lexical_ratios.csv", ["category", "ratio"],
                        ratio_rows, config_hash=cfg.hash())

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        profiles, correlations = user_profiles(disc_texts_by_user, lexicons)
    user_counts: dict[str, int] = {}
    for _, texts in disc_texts_by_user.items():
        label = volume_bucket(len(texts))
        user_counts[label] = user_counts.get(label, 0) + 1
    bucket_rows = []
    for label in sorted(profiles):
        prof = profiles[label]
        bucket_rows.append([label, user_counts.get(label, 0)] + [prof[n] for n in names])
    artifacts.write_csv(out / "user_buckets.csv",
                        ["bucket", "users"] + list(names), bucket_rows,
                        config_hash=cfg.hash())
    corr_rows = [[a, b, rho, p] for (a, b), (rho, p) in sorted(correlations.items())]
    artifacts.write_csv(out / "user_bucket_correlation.csv",
                        ["bucket_a", "bucket_b", "spearman_rho", "p"],
                        corr_rows, config_hash=cfg.hash())


# -- stage: botscan ------------------------------------------------------


def stage_botscan(state: PipelineState) -> None:
    cfg = state.cfg
    out = _out(cfg)
    classified = _read_classified(state)
    if cfg.bot_manifest_path is None:
        state.bot_ids = frozenset()
        artifacts.write_csv(out / "bot_summary.csv",
                            ["source", "ids", "period_note"], [],
                            config_hash=cfg.hash())
        artifacts.write_csv(out / "bot_shares.csv", ["city_key", "share"], [],
                            config_hash=cfg.hash())
        return
    lists = load_bot_lists(cfg.bot_manifest_path)
    union = bot_union(lists)
    state.bot_ids = union
    artifacts.write_csv(out / "bot_summary.csv",
                        ["source", "ids", "period_note"],
                        [[bl.source, len(bl.user_ids), bl.period_note] for bl in lists],
                        config_hash=cfg.hash())

    disc_users: dict[str, set[str]] = {}
    for row in classified:
        if row["is_discrimination"]:
            disc_users.setdefault(row["city_key"], set()).add(row["user_id"])
    shares = city_bot_shares(disc_users, union)
    artifacts.write_csv(out / "bot_shares.csv",
                        ["city_key", "share"],
                        [[k, shares[k]] for k in sorted(shares)],
                        config_hash=cfg.hash())


def _load_bot_ids(state: PipelineState) -> frozenset[str]:
    if not state.bot_ids and state.cfg.bot_manifest_path is not None:
        state.bot_ids = bot_union(load_bot_lists(state.cfg.bot_manifest_path))
    return state.bot_ids


# -- stage: aggregate ----------------------------------------------------


def stage_aggregate(state: PipelineState) -> None:
    cfg = state.cfg
    out = _out(cfg)
    registry = _load_registry(state)
    classified = _read_classified(state)
    bots = _load_bot_ids(state)

    records = []
    for row in classified:
        is_bot = row["user_id"] in bots
        if cfg.drop_bots and is_bot and row["is_discrimination"]:
            continue
        records.append(ClassifiedRecord(
            id=row["id"], city_key=row["city_key"], user_id=row["user_id"],
            year=int(row["year"]), score=float(row["score"]),
            is_discrimination=bool(row["is_discrimination"]),
            delineation=row["delineation"], is_bot=is_bot,
        ))
    aggs = aggregate_cities(records, registry)
    check_aggregate_identity(aggs, records)
    state.aggregates = aggs

    header, rows = aggregate_rows(aggs, registry)
    artifacts.write_csv(out / "aggregates.csv", header, rows, config_hash=cfg.hash())


def _read_aggregates(state: PipelineState):
    if not state.aggregates:
        # aggregates hold derived properties; rebuild from classified records
        stage_aggregate(state)
    return state.aggregates


# -- stage: regress ------------------------------------------------------


def _regression_design(state: PipelineState, exclude: tuple[str, ...]) -> DesignMatrix:
    cfg = state.cfg
    registry = _load_registry(state)
    aggs = [a for a in _read_aggregates(state) if a.city_key not in set(exclude)]
    measure = cfg.report.regression_measure
    names = ("social_media",) + CENSUS_COVARIATES
    rows = []
    ys = []
    dropped = []
    for agg in aggs:
        if measure == "proportion":
            sm = agg.targeted_proportion
        else:
            if agg.targeted_self_ratio is None:
                dropped.append(agg.city_key)
                continue
            sm = agg.targeted_self_ratio
        city = registry.records[agg.city_key]
        cov = city.census
        rows.append([sm, cov.pct_white, cov.pct_black, cov.pct_asian,
                     cov.pct_hispanic_latino, cov.pct_foreign_born, cov.pct_female,
                     cov.pct_age_18_64, cov.population_density, cov.median_income])
        ys.append(city.hate_crime_count)
    if dropped:
        warnings.warn(f"ratio measure undefined for {len(dropped)} cities; dropped")
    return DesignMatrix(names=names, X=np.asarray(rows, dtype=np.float64),
                        y=np.asarray(ys, dtype=np.float64))


def _write_fit(out: Path, stem: str, fit: RegressionFit, trace: StepwiseTrace | None,
               cfg_hash: str) -> None:
    artifacts.write_csv(out / f"{stem}.csv", ["variable", "beta", "se", "p"],
                        fit.to_rows(), config_hash=cfg_hash)
    if trace is not None:
        artifacts.write_csv(out / f"{stem}_trace.csv",
                            ["step", "candidate", "aic", "chosen"],
                            trace.to_rows(), config_hash=cfg_hash)


def stage_regress(state: PipelineState) -> None:
    cfg = state.cfg
    out = _out(cfg)
    variants = [("", ())]
    if cfg.report.exclude_cities:
        variants.append(("_excluded", tuple(cfg.report.exclude_cities)))
    meta = {}
    for suffix, excluded in variants:
        design = _regression_design(state, excluded)
        full = fit_negbin(design)
        _write_fit(out, f"fit_full{suffix}", full, None, cfg.hash())
        selected, trace = stepwise_backward(design)
        _write_fit(out, f"fit_stepwise{suffix}", selected, trace, cfg.hash())
        meta[f"full{suffix}"] = {
            "aic": full.aic, "theta": full.theta, "loglik": full.loglik,
            "converged": full.converged, "n_cities": int(design.X.shape[0]),
        }
        meta[f"stepwise{suffix}"] = {
            "aic": selected.aic, "theta": selected.theta,
            "kept": list(selected.names),
            "removed": [s["removed"] for s in trace.steps],
        }
    artifacts.write_json(out / "regression_meta.json", meta, config_hash=cfg.hash())


# -- stage: map ----------------------------------------------------------


def stage_map(state: PipelineState) -> None:
    cfg = state.cfg
    out = _out(cfg)
    registry = _load_registry(state)
    aggs = _read_aggregates(state)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        geo = emit_map_data(aggs, registry, fractions=cfg.report.bucket_fractions)
    artifacts.write_json(out / "map.geojson", geo, config_hash=cfg.hash())


# -- stage: features -----------------------------------------------------


def stage_features(state: PipelineState) -> None:
    cfg = state.cfg
    out = _out(cfg)
    pairs = _read_matched(state)
    classified = {row["id"]: row for row in _read_classified(state)}
    model = _load_model(state)

    texts_by_city: dict[str, list[tuple[str, str]]] = {}
    texts_by_year: dict[int, list[str]] = {}
    for rec, city_key in pairs:
        row = classified[rec.id]
        if not row["is_discrimination"]:
            continue
        texts_by_city.setdefault(city_key, []).append((rec.text, row["delineation"]))
        texts_by_year.setdefault(rec.timestamp.year, []).append(rec.text)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        global_rows, per_city = top_features(model, texts_by_city, k=cfg.report.top_k_features)
        stability = feature_stability(model, texts_by_year, k=cfg.report.top_k_features)
    state.features_global = global_rows

    artifacts.write_csv(out / "features_global.csv",
                        ["rank", "bucket", "feature", "weight"],
                        [[r["rank"], r["bucket"], r["feature"], r["weight"]]
                         for r in global_rows],
                        config_hash=cfg.hash())
    city_rows = []
    for city in sorted(per_city):
        for r in per_city[city]:
            city_rows.append([city, r["rank"], r["feature"], r["weight"],
                              r["records_targeted"], r["records_self_narration"]])
    artifacts.write_csv(out / "features_by_city.csv",
                        ["city_key", "rank", "feature", "weight",
                         "records_targeted", "records_self_narration"],
                        city_rows, config_hash=cfg.hash())
    artifacts.write_csv(out / "feature_stability.csv",
                        ["year_a", "year_b", "t", "p"],
                        [[r["year_a"], r["year_b"], r["t"], r["p"]] for r in stability],
                        config_hash=cfg.hash())


# -- stage: figures ------------------------------------------------------


def stage_figures(state: PipelineState) -> None:
    cfg = state.cfg
    out = _out(cfg)
    registry = _load_registry(state)
    aggs = _read_aggregates(state)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        geo = emit_map_data(aggs, registry, fractions=cfg.report.bucket_fractions)

    history_rows: list[dict] = []
    hist_path = out / "active_history.csv"
    if hist_path.exists():
        found, history_rows = artifacts.read_csv(hist_path)
        artifacts.check_hash(hist_path, found, cfg.hash())

    global_features = state.features_global
    if not global_features:
        feat_path = out / "features_global.csv"
        if feat_path.exists():
            found, rows = artifacts.read_csv(feat_path)
            artifacts.check_hash(feat_path, found, cfg.hash())
            global_features = [{"feature": r["feature"], "weight": float(r["weight"])}
                               for r in rows]

    figures = render_figures(out, aggs, registry, geo, history_rows, global_features)
    artifacts.write_csv(out / "figures_manifest.csv", ["file"],
                        [[name] for name in figures], config_hash=cfg.hash())


# -- driver --------------------------------------------------------------

_STAGE_FUNCS = {
    "ingest": stage_ingest,
    "trainset": stage_trainset,
    "train": stage_train,
    "active-learn": stage_active_learn,
    "classify": stage_classify,
    "lexical": stage_lexical,
    "botscan": stage_botscan,
    "aggregate": stage_aggregate,
    "regress": stage_regress,
    "map": stage_map,
    "features": stage_features,
    "figures": stage_figures,
}


def run_stage(state: PipelineState, name: str) -> None:
    func = _STAGE_FUNCS[name]
    started = time.perf_counter()
    try:
        func(state)
    except (ConfigError, StageError, InvariantViolation):
        raise
    except Exception as exc:  # noqa: BLE001  (attach the failing stage name)
        raise StageError(name, str(exc)) from exc
    state.timings[name] = time.perf_counter() - started


def run_all(cfg: PipelineConfig, start: str = "ingest") -> PipelineState:
    """Run every stage from `start` on; earlier stages resume from artifacts."""
    first = stage_index(start)
    state = PipelineState(cfg=cfg)
    for name in STAGES[first:]:
        run_stage(state, name)
    return state
