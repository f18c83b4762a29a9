"""Self-hosted labeling backend.

Serves tasks to annotators with hidden accuracy checks, aggregates judgments
into trust-weighted labels, and exposes a conflict queue for manual
adjudication.  All state transitions run under one lock, so concurrent
annotators see a linearizable history; every mutation is appended to a JSONL
event log for auditability.

Trust model: every annotator starts at 1.0; hidden test tasks are interleaved
into the queue (default 1 in 10 serves), trust is accuracy on those, and an
annotator is permanently deactivated once they have seen 5 test tasks with
accuracy below 0.80.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

LABEL_DISCRIMINATION = "discrimination"
LABEL_NO_DISCRIMINATION = "no_discrimination"
VALID_LABELS = (LABEL_DISCRIMINATION, LABEL_NO_DISCRIMINATION)

STATUS_PENDING = "pending"
STATUS_RESOLVED = "resolved"
STATUS_CONFLICT = "conflict"

TRUST_FLOOR = 0.80
TEST_TASKS_BEFORE_GATE = 5
DEFAULT_TEST_RATE = 10  # one hidden test task per this many serves
DEFAULT_MIN_JUDGMENTS = 2

SENSITIVITY_NOTICE = (
    "This task may contain offensive or hateful language collected from "
    "public social media. Label it for research purposes; you may stop at "
    "any time without losing credit for completed work."
)

LABELING_CRITERION = (
    "Mark 'discrimination' when the post attacks, demeans, or expresses bias "
    "against a person or group because of race, ethnicity, or national "
    "origin, whether directed at a target or narrating an experience."
)


class ServiceError(Exception):
    def __init__(self, status_code: int, detail: str):
        super().__init__(detail)
        self.status_code = status_code
        self.detail = detail


@dataclass
class Task:
    task_id: str
    text: str
    is_test: bool = False
    gold_label: str | None = None


@dataclass
class Annotator:
    annotator_id: str
    test_correct: int = 0
    test_seen: int = 0
    active: bool = True
    serves: int = 0
    completed: int = 0

    @property
    def trust(self) -> float:
        if self.test_seen == 0:
            return 1.0
        return self.test_correct / self.test_seen


@dataclass(frozen=True)
class Judgment:
    task_id: str
    annotator_id: str
    label: str
    submitted_at: str


@dataclass
class AggregatedLabel:
    task_id: str
    label: str | None
    confidence: float
    status: str
    provenance: str = "crowd"
    margin: float = 0.0


class AnnotationService:
    def __init__(
        self,
        tasks: list[Task] | None = None,
        min_judgments: int = DEFAULT_MIN_JUDGMENTS,
        test_rate: int = DEFAULT_TEST_RATE,
        log_path: str | Path | None = None,
        history_csv: str | Path | None = None,
    ):
        self._lock = threading.Lock()
        self.min_judgments = min_judgments
        self.test_rate = max(1, test_rate)
        self.log_path = Path(log_path) if log_path else None
        self.history_csv = Path(history_csv) if history_csv else None
        self.tasks: dict[str, Task] = {}
        self.task_order: list[str] = []   # insertion order of real tasks
        self.test_order: list[str] = []
        self.annotators: dict[str, Annotator] = {}
        self.judgments: dict[str, dict[str, Judgment]] = {}
        self.aggregates: dict[str, AggregatedLabel] = {}
        self.assigned: dict[str, str] = {}  # annotator -> outstanding task_id
        for t in tasks or []:
            self._add_task(t)

    # -- task/annotator bookkeeping -------------------------------------

    def _add_task(self, task: Task) -> None:
        if task.task_id in self.tasks:
            raise ValueError(f"duplicate task id {task.task_id}")
        if task.is_test and task.gold_label not in VALID_LABELS:
            raise ValueError(f"test task {task.task_id} needs a valid gold label")
        self.tasks[task.task_id] = task
        (self.test_order if task.is_test else self.task_order).append(task.task_id)
        if not task.is_test:
            self.judgments[task.task_id] = {}
            self.aggregates[task.task_id] = AggregatedLabel(
                task_id=task.task_id, label=None, confidence=0.0, status=STATUS_PENDING
            )

    def add_tasks(self, tasks: list[Task]) -> None:
        with self._lock:
            for t in tasks:
                self._add_task(t)

    def _annotator(self, annotator_id: str) -> Annotator:
        if not annotator_id:
            raise ServiceError(400, "annotator id required")
        ann = self.annotators.get(annotator_id)
        if ann is None:
            ann = Annotator(annotator_id=annotator_id)
            self.annotators[annotator_id] = ann
            self._log({"event": "register", "annotator": annotator_id})
        return ann

    def _log(self, payload: dict) -> None:
        if self.log_path is None:
            return
        payload = dict(payload, at=datetime.now(timezone.utc).isoformat())
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(payload, sort_keys=True) + "\n")

    # -- serving --------------------------------------------------------

    def next_task(self, annotator_id: str) -> dict | None:
        """Next task payload for this annotator, or None when the queue is empty.

        Re-requesting without submitting returns the same outstanding task, so
        a page reload cannot leak tasks or duplicate work.
        """
        with self._lock:
            ann = self._annotator(annotator_id)
            if not ann.active:
                raise ServiceError(403, "annotator deactivated")
            outstanding = self.assigned.get(annotator_id)
            if outstanding is not None:
                return self._task_payload(self.tasks[outstanding])
            task = self._pick_task(ann)
            if task is None:
                return None
            ann.serves += 1
            self.assigned[annotator_id] = task.task_id
            return self._task_payload(task)

    def _task_payload(self, task: Task) -> dict:
        # only the text goes out; test tasks are indistinguishable
        return {
            "task_id": task.task_id,
            "text": task.text,
            "sensitivity_notice": SENSITIVITY_NOTICE,
            "criterion": LABELING_CRITERION,
        }

    def _pick_task(self, ann: Annotator) -> Task | None:
        judged = {tid for tid, by in self.judgments.items() if ann.annotator_id in by}
        test_judged = {
            tid for tid in self.test_order
            if ann.annotator_id in self.judgments.get(tid, {})
        }
        want_test = (ann.serves + 1) % self.test_rate == 0
        test_candidates = [t for t in self.test_order if t not in test_judged]
        if want_test and test_candidates:
            return self.tasks[test_candidates[0]]
        # fewest judgments first, then insertion order
        open_tasks = [
            tid for tid in self.task_order
            if tid not in judged
            and self.aggregates[tid].status == STATUS_PENDING
            and len(self.judgments[tid]) < self.min_judgments
        ]
        if open_tasks:
            best = min(
                open_tasks,
                key=lambda tid: (len(self.judgments[tid]), self.task_order.index(tid)),
            )
            return self.tasks[best]
        return None

    # -- judgments ------------------------------------------------------

    def submit_judgment(self, task_id: str, annotator_id: str, label: str) -> dict:
        with self._lock:
            ann = self._annotator(annotator_id)
            if not ann.active:
                raise ServiceError(403, "annotator deactivated")
            if label not in VALID_LABELS:
                raise ServiceError(400, f"label must be one of {VALID_LABELS}")
            task = self.tasks.get(task_id)
            if task is None:
                raise ServiceError(404, f"no task {task_id}")
            if self.assigned.get(annotator_id) != task_id:
                raise ServiceError(409, "task not assigned to this annotator")
            by = self.judgments.setdefault(task_id, {})
            if annotator_id in by:
                raise ServiceError(409, "duplicate judgment for this task")
            judgment = Judgment(
                task_id=task_id,
                annotator_id=annotator_id,
                label=label,
                submitted_at=datetime.now(timezone.utc).isoformat(),
            )
            by[annotator_id] = judgment
            del self.assigned[annotator_id]
            ann.completed += 1
            self._log({
                "event": "judgment", "task": task_id,
                "annotator": annotator_id, "label": label,
            })
            if task.is_test:
                ann.test_seen += 1
                if label == task.gold_label:
                    ann.test_correct += 1
                if ann.test_seen >= TEST_TASKS_BEFORE_GATE and ann.trust < TRUST_FLOOR:
                    ann.active = False
                    self._log({"event": "deactivate", "annotator": annotator_id,
                               "trust": ann.trust})
            else:
                self._recompute(task_id)
            return {
                "recorded": True,
                "task_id": task_id,
                "annotator_active": ann.active,
            }

    def _recompute(self, task_id: str) -> None:
        agg = self.aggregates[task_id]
        if agg.provenance == "adjudicated":
            return
        by = self.judgments[task_id]
        if len(by) < self.min_judgments:
            agg.status = STATUS_PENDING
            agg.label = None
            agg.confidence = 0.0
            return
        mass = {lbl: 0.0 for lbl in VALID_LABELS}
        total = 0.0
        for j in by.values():
            trust = self.annotators[j.annotator_id].trust
            mass[j.label] += trust
            total += trust
        ranked = sorted(mass.items(), key=lambda kv: -kv[1])
        (top_label, top_mass), (_, second_mass) = ranked[0], ranked[1]
        agg.margin = top_mass - second_mass
        if total == 0.0 or top_mass == second_mass:
            agg.status = STATUS_CONFLICT
            agg.label = None
            agg.confidence = 0.0
            self._log({"event": "conflict", "task": task_id})
            return
        agg.status = STATUS_RESOLVED
        agg.label = top_label
        agg.confidence = top_mass / total

    # -- adjudication ---------------------------------------------------

    def conflicts(self) -> list[dict]:
        with self._lock:
            out = []
            for tid in self.task_order:
                agg = self.aggregates[tid]
                if agg.status != STATUS_CONFLICT:
                    continue
                votes = [
                    {"label": j.label, "trust": self.annotators[j.annotator_id].trust}
                    for j in self.judgments[tid].values()
                ]
                out.append({
                    "task_id": tid,
                    "text": self.tasks[tid].text,
                    "votes": votes,
                    "margin": agg.margin,
                })
            return out

    def adjudicate(self, task_id: str, label: str, adjudicator_id: str) -> dict:
        with self._lock:
            if label not in VALID_LABELS:
                raise ServiceError(400, f"label must be one of {VALID_LABELS}")
            agg = self.aggregates.get(task_id)
            if agg is None:
                raise ServiceError(404, f"no task {task_id}")
            if agg.status != STATUS_CONFLICT:
                raise ServiceError(409, "task is not in conflict")
            agg.label = label
            agg.confidence = 1.0
            agg.status = STATUS_RESOLVED
            agg.provenance = "adjudicated"
            self._log({"event": "adjudication", "task": task_id,
                       "adjudicator": adjudicator_id, "label": label})
            return {
                "task_id": task_id,
                "label": label,
                "confidence": 1.0,
                "status": agg.status,
                "provenance": agg.provenance,
            }

    # -- export ---------------------------------------------------------

    def export_rows(self) -> list[tuple[str, str, str, float, str]]:
        """(task_id, text, label, confidence, provenance) for every resolved task."""
        with self._lock:
            rows = []
            for tid in self.task_order:
                agg = self.aggregates[tid]
                if agg.status == STATUS_RESOLVED and agg.label is not None:
                    rows.append((tid, self.tasks[tid].text, agg.label,
                                 agg.confidence, agg.provenance))
            return rows

    def export_csv(self) -> str:
        import csv
        import io

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["task_id", "text", "label", "confidence", "provenance"])
        for row in self.export_rows():
            writer.writerow([row[0], row[1], row[2], f"{row[3]:.6f}", row[4]])
        return buf.getvalue()

    def summary(self) -> dict:
        rows = self.export_rows()
        mean_conf = sum(r[3] for r in rows) / len(rows) if rows else 0.0
        with self._lock:
            pending = sum(1 for a in self.aggregates.values() if a.status == STATUS_PENDING)
            conflicts = sum(1 for a in self.aggregates.values() if a.status == STATUS_CONFLICT)
        return {
            "resolved": len(rows),
            "pending": pending,
            "conflicts": conflicts,
            "mean_confidence": mean_conf,
        }

    def annotator_info(self, annotator_id: str) -> dict:
        with self._lock:
            ann = self.annotators.get(annotator_id)
            if ann is None:
                raise ServiceError(404, f"no annotator {annotator_id}")
            return {
                "annotator_id": ann.annotator_id,
                "trust": ann.trust,
                "test_seen": ann.test_seen,
                "test_correct": ann.test_correct,
                "active": ann.active,
                "completed": ann.completed,
                # stopping early never forfeits credit for submitted work
                "payment_retained": True,
            }
