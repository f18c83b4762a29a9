"""End-to-end pipeline runs on a generated demo corpus, plus CLI behavior."""

import json
from dataclasses import replace
from pathlib import Path
from types import SimpleNamespace

import pytest

from citybias import artifacts, cli, pipeline
from citybias.config import load_config
from citybias.errors import StageError
from citybias.fixtures import generate_fixture

N_CITIES = 20
N_RECORDS = 900

EXPECTED_ARTIFACTS = [
    "matched.ndjson",
    "rejects.csv",
    "ingest_stats.json",
    "trainset.csv",
    "pool.csv",
    "model_initial.bin",
    "eval_initial.json",
    "model.bin",
    "active_history.csv",
    "loop_meta.json",
    "trainset_final.csv",
    "classified.ndjson",
    "lexical_profiles.csv",
    "lexical_ratios.csv",
    "user_buckets.csv",
    "user_bucket_correlation.csv",
    "bot_summary.csv",
    "bot_shares.csv",
    "aggregates.csv",
    "fit_full.csv",
    "fit_stepwise.csv",
    "fit_stepwise_trace.csv",
    "fit_full_excluded.csv",
    "fit_stepwise_excluded.csv",
    "fit_stepwise_excluded_trace.csv",
    "regression_meta.json",
    "map.geojson",
    "features_global.csv",
    "features_by_city.csv",
    "feature_stability.csv",
    "figures_manifest.csv",
]


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    """One full CLI run on a small corpus, shared by every test in the module."""
    root = tmp_path_factory.mktemp("demo")
    summary = generate_fixture(root, seed=11, n_cities=N_CITIES, n_records=N_RECORDS)
    rc = cli.main(["run-all", "--config", str(root / "config.yaml")])
    cfg = load_config(root / "config.yaml")
    return SimpleNamespace(root=root, out=root / "out", summary=summary, rc=rc, cfg=cfg)


def test_run_all_exits_zero(run):
    assert run.rc == 0


def test_every_artifact_written(run):
    for name in EXPECTED_ARTIFACTS:
        assert (run.out / name).exists(), name
    _, manifest = artifacts.read_csv(run.out / "figures_manifest.csv")
    assert manifest, "figures manifest is empty"
    for row in manifest:
        assert (run.out / row["file"]).exists(), row["file"]


def test_ingest_accounts_for_every_line(run):
    stats = artifacts.read_json(run.out / "ingest_stats.json")
    assert stats["matched"] + stats["unmatched"] + stats["rejected"] == stats["total"]
    # the fixture appends 5 out-of-window and 5 unknown-place lines
    assert stats["out_of_window"] == 5
    assert stats["unmatched"] >= 10
    assert stats["rejected"] >= 2
    assert stats["matched"] <= run.summary["records"]
    _, rejects = artifacts.read_csv(run.out / "rejects.csv")
    assert len(rejects) >= 2
    assert all(row["reason"] for row in rejects)


def test_artifact_headers_carry_config_hash(run):
    want = run.cfg.hash()
    for name in ("aggregates.csv", "trainset.csv", "active_history.csv"):
        found, _ = artifacts.read_csv(run.out / name)
        assert found == want, name
    header, _ = artifacts.read_ndjson(run.out / "classified.ndjson")
    assert header["config"] == want
    with open(run.out / "matched.ndjson", encoding="utf-8") as fh:
        matched_header = json.loads(fh.readline())
    assert matched_header["config"] == want
    meta = artifacts.read_json(run.out / "regression_meta.json")
    assert meta["_pipeline"]["config"] == want


def test_classified_rows_are_consistent(run):
    stats = artifacts.read_json(run.out / "ingest_stats.json")
    _, rows = artifacts.read_ndjson(run.out / "classified.ndjson")
    assert len(rows) == stats["matched"]
    for row in rows:
        assert 0.0 <= row["score"] <= 1.0
        if row["is_discrimination"]:
            assert row["delineation"] in ("targeted", "self_narration")
        else:
            assert row["delineation"] == ""


def test_aggregates_one_row_per_city(run):
    _, rows = artifacts.read_csv(run.out / "aggregates.csv")
    assert len(rows) == N_CITIES
    keys = [row["city_key"] for row in rows]
    assert keys == sorted(keys)
    _, classified = artifacts.read_ndjson(run.out / "classified.ndjson")
    n_disc = sum(1 for r in classified if r["is_discrimination"])
    assert sum(int(row["discrimination_records"]) for row in rows) == n_disc
    assert sum(int(row["total_records"]) for row in rows) == len(classified)


def test_loop_meta_reports_termination(run):
    meta = artifacts.read_json(run.out / "loop_meta.json")
    assert meta["status"] in ("plateau", "max-iterations", "label-starved")
    _, seed_rows = artifacts.read_csv(run.out / "trainset.csv")
    assert meta["final_train_size"] >= len(seed_rows)
    assert "seed" in meta["provenance_counts"]
    _, history = artifacts.read_csv(run.out / "active_history.csv")
    assert int(history[0]["iteration"]) == 0
    assert len(history) == meta["iterations"] + 1


def test_regression_meta_has_both_variants(run):
    meta = artifacts.read_json(run.out / "regression_meta.json")
    for key in ("full", "stepwise", "full_excluded", "stepwise_excluded"):
        assert key in meta, key
    _, full_rows = artifacts.read_csv(run.out / "fit_full.csv")
    full_vars = {row["variable"] for row in full_rows}
    kept = set(meta["stepwise"]["kept"])
    removed = set(meta["stepwise"]["removed"])
    assert kept <= full_vars
    assert removed <= full_vars
    assert kept.isdisjoint(removed)
    assert meta["stepwise"]["aic"] <= meta["full"]["aic"] + 1e-9
    # the excluded variant drops two cities from the design
    assert meta["full_excluded"]["n_cities"] == meta["full"]["n_cities"] - 2


def test_map_has_point_per_city(run):
    with open(run.out / "map.geojson", encoding="utf-8") as fh:
        geo = json.load(fh)
    assert geo["type"] == "FeatureCollection"
    assert len(geo["features"]) == N_CITIES
    for feat in geo["features"]:
        assert feat["geometry"]["type"] == "Point"
        lon, lat = feat["geometry"]["coordinates"]
        assert -180.0 <= lon <= 180.0
        assert -90.0 <= lat <= 90.0


def test_resume_after_classify_needs_no_raw_records(run):
    """Downstream stages rebuild byte-identical outputs from artifacts alone."""
    raw = run.root / "records.ndjson"
    moved = run.root / "records.ndjson.bak"
    watch = ["classified.ndjson", "aggregates.csv", "map.geojson",
             "features_global.csv", "rate_histogram.png", "top_features.png"]
    for name in watch:
        assert (run.out / name).exists(), name
    before = {name: (run.out / name).read_bytes() for name in watch}
    raw.rename(moved)
    try:
        pipeline.run_all(run.cfg, start="classify")
    finally:
        moved.rename(raw)
    for name in watch:
        assert (run.out / name).read_bytes() == before[name], name


def test_resume_with_changed_seed_fails_hash_check(run):
    rc = cli.main(["run-all", "--config", str(run.root / "config.yaml"),
                   "--seed", "999", "--from", "classify"])
    assert rc == 3


def test_resume_into_empty_out_dir_fails(run, tmp_path):
    rc = cli.main(["run-all", "--config", str(run.root / "config.yaml"),
                   "--out-dir", str(tmp_path / "empty"), "--from", "classify"])
    assert rc == 3
    with pytest.raises(StageError, match="missing artifact"):
        pipeline.run_all(replace(run.cfg, out_dir=tmp_path / "empty2"),
                         start="classify")


def test_missing_config_file_exit_code(tmp_path):
    rc = cli.main(["run-all", "--config", str(tmp_path / "nope.yaml")])
    assert rc == 2


def test_unknown_resume_stage_exit_code(run):
    rc = cli.main(["run-all", "--config", str(run.root / "config.yaml"),
                   "--from", "nonsense"])
    assert rc == 2


def test_invalid_config_value_exit_code(run, tmp_path):
    text = (run.root / "config.yaml").read_text(encoding="utf-8")
    bad = tmp_path / "bad.yaml"
    bad.write_text(text.replace("k_folds: 10", "k_folds: 1"), encoding="utf-8")
    rc = cli.main(["run-all", "--config", str(bad)])
    assert rc == 2


def test_single_stage_rerun(run, capsys):
    rc = cli.main(["figures", "--config", str(run.root / "config.yaml")])
    assert rc == 0
    assert "figures: done" in capsys.readouterr().out


def test_evaluate_prints_fold_metrics(run, capsys):
    rc = cli.main(["evaluate", "--config", str(run.root / "config.yaml")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "k=10" in out
    assert "precision" in out and "f1" in out


def test_gen_fixture_command(tmp_path, capsys):
    dest = tmp_path / "mini"
    rc = cli.main(["gen-fixture", "--dest", str(dest), "--seed", "5",
                   "--cities", "5", "--records", "200"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "records:" in out and "cities: 5" in out
    for name in ("config.yaml", "records.ndjson", "registry.csv", "labels.csv",
                 "lexicon.csv", "categories.txt", "test_tasks.csv"):
        assert (dest / name).exists(), name
    assert (dest / "bots" / "manifest.csv").exists()


def test_delineate_text_command(capsys):
    rc = cli.main(["delineate", "--text", "they are nothing but zorblins around here"])
    assert rc == 0
    assert capsys.readouterr().out.startswith("targeted\t")
    rc = cli.main(["delineate", "--text", "i was harassed for being a zorblin"])
    assert rc == 0
    assert capsys.readouterr().out.startswith("self_narration\t")


def test_delineate_sample_command(run, capsys):
    rc = cli.main(["delineate", "--sample", "3", "--sample-seed", "2",
                   "--config", str(run.root / "config.yaml")])
    assert rc == 0
    lines = [ln for ln in capsys.readouterr().out.splitlines() if ln]
    assert len(lines) == 3
    for line in lines:
        rid, label, text = line.split("\t")
        assert label in ("targeted", "self_narration")
        assert text


def test_delineate_sample_needs_config():
    rc = cli.main(["delineate", "--sample", "3"])
    assert rc == 2


def test_drop_bots_filters_flagged_posters(run, tmp_path):
    """Dropping bots only shrinks the city whose posters are on the lists."""
    _, baseline = artifacts.read_csv(run.out / "aggregates.csv")
    base_by_key = {row["city_key"]: row for row in baseline}

    cfg2 = replace(run.cfg, drop_bots=True, out_dir=tmp_path / "out2")
    state = pipeline.PipelineState(cfg=cfg2)
    _, state.classified = artifacts.read_ndjson(run.out / "classified.ndjson")
    pipeline.stage_aggregate(state)

    _, dropped = artifacts.read_csv(tmp_path / "out2" / "aggregates.csv")
    high = run.summary["high_bot_city"]
    changed = 0
    for row in dropped:
        base = int(base_by_key[row["city_key"]]["discrimination_records"])
        now = int(row["discrimination_records"])
        assert now <= base
        if now < base:
            changed += 1
            assert row["city_key"] == high
    assert changed == 1
