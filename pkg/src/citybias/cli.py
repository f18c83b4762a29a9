"""Command line entry point.

Exit codes: 0 success, 2 configuration error, 3 stage failure, 4 invariant
violation.  Each subcommand maps to one pipeline stage (plus gen-fixture,
evaluate, delineate, and annotate-serve utilities); run-all chains every
stage and accepts --from to resume mid-pipeline.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, pipeline
from .classifier import kfold_evaluate, select_threshold
from .config import PipelineConfig, load_config, validate_config
from .delineate import count_pronouns, delineate
from .errors import ConfigError, InvariantViolation, StageError
from .fixtures import DEFAULT_SEED, generate_fixture
from .presets import apply_reference

STAGE_COMMANDS = {
    "ingest": "ingest",
    "build-trainset": "trainset",
    "train": "train",
    "active-learn": "active-learn",
    "classify": "classify",
    "lexical": "lexical",
    "botscan": "botscan",
    "aggregate": "aggregate",
    "regress": "regress",
    "map": "map",
    "features": "features",
    "figures": "figures",
}


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="path to the pipeline config file")
    p.add_argument("--out-dir", default=None, help="override the configured output directory")
    p.add_argument("--seed", type=int, default=None, help="override the configured seed")
    p.add_argument("--drop-bots", action="store_true",
                   help="drop bot-flagged discrimination records from aggregates")
    p.add_argument("--preset", choices=["reference"], default=None,
                   help="swap in the reference classifier operating point")


def _load(args: argparse.Namespace) -> PipelineConfig:
    cfg = load_config(args.config, out_dir=args.out_dir)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.drop_bots:
        cfg = replace(cfg, drop_bots=True)
    if args.preset == "reference":
        cfg = apply_reference(cfg)
    validate_config(cfg)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="citybias",
        description="Geotagged-text discrimination analysis pipeline.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for command in STAGE_COMMANDS:
        p = sub.add_parser(command, help=f"run the {STAGE_COMMANDS[command]} stage")
        _add_config_args(p)

    p = sub.add_parser("run-all", help="run every stage in order")
    _add_config_args(p)
    p.add_argument("--from", dest="start", default="ingest",
                   help="resume from this stage, re-reading earlier artifacts")

    p = sub.add_parser("evaluate", help="cross-validate the current training set")
    _add_config_args(p)

    p = sub.add_parser("delineate", help="classify pronoun perspective of text lines")
    p.add_argument("--text", help="single text to classify; otherwise reads stdin lines")
    p.add_argument("--config", help="with --sample: pipeline config to read artifacts from")
    p.add_argument("--sample", type=int, default=None,
                   help="print N random classified-discrimination records for manual audit")
    p.add_argument("--sample-seed", type=int, default=0)
    p.add_argument("--out-dir", default=None)

    p = sub.add_parser("annotate-serve", help="serve the labeling HTTP API")
    _add_config_args(p)
    p.add_argument("--tasks", default=None,
                   help="CSV of task_id,text rows; default samples the pool near the boundary")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)

    p = sub.add_parser("gen-fixture", help="generate the synthetic demo corpus")
    p.add_argument("--dest", required=True, help="directory to write the fixture into")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--cities", type=int, default=100)
    p.add_argument("--records", type=int, default=6000)

    return parser


def _cmd_stage(args: argparse.Namespace, stage: str) -> int:
    cfg = _load(args)
    state = pipeline.PipelineState(cfg=cfg)
    pipeline.run_stage(state, stage)
    print(f"{stage}: done ({state.timings.get(stage, 0.0):.2f}s)")
    return 0


def _cmd_run_all(args: argparse.Namespace) -> int:
    cfg = _load(args)
    state = pipeline.run_all(cfg, start=args.start)
    for name in pipeline.STAGES[pipeline.stage_index(args.start):]:
        print(f"{name}: {state.timings.get(name, 0.0):.2f}s")
    print(f"artifacts in {cfg.out_dir}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _load(args)
    state = pipeline.PipelineState(cfg=cfg)
    pipeline._read_trainset(state)
    tc = pipeline._train_config(cfg, 0.5)
    report = kfold_evaluate(state.train_set, cfg.classifier.k_folds, tc)
    threshold = (select_threshold(report.oof_scores)
                 if cfg.classifier.threshold == "auto" else float(cfg.classifier.threshold))
    print(f"k={report.k} threshold={threshold}")
    print(f"precision {report.mean_precision:.4f}  recall {report.mean_recall:.4f}  "
          f"f1 {report.mean_f1:.4f}  auc {report.mean_auc:.4f}")
    return 0


def _cmd_delineate(args: argparse.Namespace) -> int:
    if args.sample is not None:
        if not args.config:
            raise ConfigError("--sample needs --config to locate artifacts")
        import numpy as np

        cfg = load_config(args.config, out_dir=args.out_dir)
        state = pipeline.PipelineState(cfg=cfg)
        by_id = {rec.id: rec for rec, _ in pipeline._read_matched(state)}
        disc = [row for row in pipeline._read_classified(state) if row["is_discrimination"]]
        rng = np.random.default_rng(args.sample_seed)
        take = min(args.sample, len(disc))
        idx = rng.choice(len(disc), size=take, replace=False)
        for i in sorted(int(j) for j in idx):
            row = disc[i]
            print(f"{row['id']}\t{row['delineation']}\t{by_id[row['id']].text}")
        return 0
    lines = [args.text] if args.text is not None else [ln.rstrip("\n") for ln in sys.stdin]
    for line in lines:
        if not line.strip():
            continue
        counts = count_pronouns(line)
        label = delineate(line)
        print(f"{label}\tfirst={counts.first} second={counts.second} "
              f"third={counts.third}\t{line}")
    return 0


def _cmd_annotate_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .annotation import AnnotationService, Task
    from .annotation.api import build_app

    cfg = _load(args)
    out = Path(cfg.out_dir)
    tasks: list[Task] = []
    if args.tasks:
        with open(args.tasks, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                tasks.append(Task(task_id=row["task_id"], text=row["text"]))
    else:
        from .active_learning import ScoredRecord, sample_boundary

        state = pipeline.PipelineState(cfg=cfg)
        pipeline._read_trainset(state)
        model = pipeline._load_model(state)
        scored = [(p, model.predict(p.text)) for p in state.pool]
        batch = sample_boundary(
            [ScoredRecord(id=p.id, text=p.text, score=s) for p, s in scored],
            model.threshold, fraction=cfg.active_learning.fraction, iteration=1,
        )
        tasks = [Task(task_id=r.id, text=r.text) for r in batch.all_records()]
    if cfg.test_tasks_path is not None:
        with open(cfg.test_tasks_path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                tasks.append(Task(task_id=row["task_id"], text=row["text"],
                                  is_test=True, gold_label=row["gold"]))
    out.mkdir(parents=True, exist_ok=True)
    history = out / "active_history.csv"
    service = AnnotationService(
        tasks,
        min_judgments=cfg.annotation.min_judgments,
        test_rate=cfg.annotation.test_rate,
        log_path=out / "annotation_log.ndjson",
        history_csv=history if history.exists() else None,
    )
    app = build_app(service)
    print(f"serving {len(tasks)} tasks on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_gen_fixture(args: argparse.Namespace) -> int:
    summary = generate_fixture(args.dest, seed=args.seed, n_cities=args.cities,
                               n_records=args.records)
    for key, value in summary.items():
        print(f"{key}: {value}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in STAGE_COMMANDS:
            return _cmd_stage(args, STAGE_COMMANDS[args.command])
        if args.command == "run-all":
            return _cmd_run_all(args)
        if args.command == "evaluate":
            return _cmd_evaluate(args)
        if args.command == "delineate":
            return _cmd_delineate(args)
        if args.command == "annotate-serve":
            return _cmd_annotate_serve(args)
        if args.command == "gen-fixture":
            return _cmd_gen_fixture(args)
        parser.error(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"stage {exc.stage} failed: {exc}", file=sys.stderr)
        return 3
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
