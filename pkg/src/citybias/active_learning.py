"""Boundary-uncertainty active learning loop.

Each round scores the unlabeled pool, pulls the records closest to the
decision threshold from both sides, gets labels for them, folds the labels
into the training set, retrains, and re-evaluates.  The loop stops when mean
cross-validated F1 stops improving, the iteration cap is hit, or the label
source runs dry.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

from .classifier import ClassifierModel, EvalReport, LabeledExample, TrainConfig, kfold_evaluate, train
from .errors import ConfigError

PLATEAU_EPSILON = 0.002
PLATEAU_WINDOW = 2
MAX_ITERATIONS = 10

STATUS_PLATEAU = "plateau"
STATUS_MAX_ITERATIONS = "max-iterations"
STATUS_LABEL_STARVED = "label-starved"


@dataclass(frozen=True)
class PoolRecord:
    id: str
    text: str


@dataclass(frozen=True)
class ScoredRecord:
    id: str
    text: str
    score: float


@dataclass
class BoundaryBatch:
    below: list[ScoredRecord]
    above: list[ScoredRecord]
    iteration: int

    def all_records(self) -> list[ScoredRecord]:
        return self.below + self.above


@dataclass
class HistoryRow:
    iteration: int
    train_size: int
    positives: int
    mean_f1: float
    mean_auc: float
    threshold: float


@dataclass
class LoopResult:
    model: ClassifierModel
    history: list[HistoryRow]
    status: str
    train_set: list[LabeledExample]
    final_eval: EvalReport


# maps batch records to labels; returning [] signals exhaustion
LabelSource = Callable[[list[ScoredRecord]], list[tuple[str, int]]]


def fixture_label_source(answers: dict[str, int]) -> LabelSource:
    """Label source backed by a fixed answer key (tests, replay runs)."""

    def source(records: list[ScoredRecord]) -> list[tuple[str, int]]:
        return [(r.id, answers[r.id]) for r in records if r.id in answers]

    return source


def sample_boundary(pool: list[ScoredRecord], threshold: float, fraction: float = 0.05,
                    iteration: int = 0) -> BoundaryBatch:
    """Nearest ceil(fraction*|pool|) records on each side of the threshold.

    Distance ties break by record id.  A side with fewer records than
    requested yields everything it has, with a warning.
    """
    if not 0.0 < fraction < 0.5:
        raise ConfigError(f"boundary fraction must be in (0, 0.5), got {fraction}")
    need = math.ceil(fraction * len(pool))
    below = sorted(
        (r for r in pool if r.score < threshold),
        key=lambda r: (abs(r.score - threshold), r.id),
    )
    above = sorted(
        (r for r in pool if r.score >= threshold),
        key=lambda r: (abs(r.score - threshold), r.id),
    )
    if len(below) < need or len(above) < need:
        warnings.warn(
            f"boundary sampling short: wanted {need} per side, "
            f"have {len(below)} below / {len(above)} above",
            stacklevel=2,
        )
    return BoundaryBatch(below=below[:need], above=above[:need], iteration=iteration)


def _positives(examples: list[LabeledExample]) -> int:
    return sum(e.label for e in examples)


def run_active_loop(
    initial_train: list[LabeledExample],
    unlabeled_pool: list[PoolRecord],
    label_source: LabelSource,
    config: TrainConfig = TrainConfig(),
    k: int = 10,
    fraction: float = 0.05,
    epsilon: float = PLATEAU_EPSILON,
    max_iterations: int = MAX_ITERATIONS,
) -> LoopResult:
    """Iterate train/evaluate/sample/label until plateau or exhaustion.

    History row 0 is the pre-loop baseline; rows 1..n are loop iterations.
    The training set only ever grows, and appended examples carry
    "active-learning, iteration i" provenance.
    """
    train_set = list(initial_train)
    pool = {r.id: r for r in unlabeled_pool}

    model = train(train_set, config)
    report = kfold_evaluate(train_set, k, config)
    history = [
        HistoryRow(0, len(train_set), _positives(train_set), report.mean_f1,
                   report.mean_auc, model.threshold)
    ]
    # baseline improvement is measured against zero so a single flat round can
    # already complete the plateau window
    improvements = [report.mean_f1]
    status = STATUS_MAX_ITERATIONS

    for iteration in range(1, max_iterations + 1):
        if len(improvements) >= PLATEAU_WINDOW and all(
            imp < epsilon for imp in improvements[-PLATEAU_WINDOW:]
        ):
            status = STATUS_PLATEAU
            break
        scored = [
            ScoredRecord(r.id, r.text, model.predict(r.text)) for r in pool.values()
        ]
        if not scored:
            status = STATUS_LABEL_STARVED
            break
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            batch = sample_boundary(scored, model.threshold, fraction, iteration)
        labeled = label_source(batch.all_records())
        if not labeled:
            status = STATUS_LABEL_STARVED
            break
        for rec_id, label in labeled:
            rec = pool.pop(rec_id)
            train_set.append(
                LabeledExample(
                    text=rec.text,
                    label=label,
                    confidence=1.0,
                    provenance=f"active-learning, iteration {iteration}",
                )
            )
        model = train(train_set, config)
        report = kfold_evaluate(train_set, k, config)
        history.append(
            HistoryRow(iteration, len(train_set), _positives(train_set),
                       report.mean_f1, report.mean_auc, model.threshold)
        )
        improvements.append(history[-1].mean_f1 - history[-2].mean_f1)
    else:
        status = STATUS_MAX_ITERATIONS

    return LoopResult(model=model, history=history, status=status,
                      train_set=train_set, final_eval=report)
