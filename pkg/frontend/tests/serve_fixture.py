"""Two live annotation services for the frontend test suite.

Port A hosts the scripted-session queue: 18 real tasks, 2 hidden quality
probes at a 1-in-10 serve rate, and a history CSV for the dashboard. Port B
hosts a strict gate queue (every serve is a probe) for the deactivation test.
"""

import argparse
import tempfile
import threading
from pathlib import Path

import uvicorn

from citybias import artifacts
from citybias.annotation import AnnotationService, Task
from citybias.annotation.api import build_app

HISTORY_ROWS = [
    [0, 100, 12, 0.81, 0.9, 0.5],
    [1, 150, 20, 0.84, 0.92, 0.5],
    [2, 200, 31, 0.86, 0.93, 0.5],
]


def session_service() -> AnnotationService:
    hist = Path(tempfile.mkdtemp()) / "active_history.csv"
    artifacts.write_csv(
        hist,
        ["iteration", "train_size", "positives", "mean_f1", "mean_auc", "threshold"],
        HISTORY_ROWS,
        config_hash="uitest",
    )
    tasks = [Task(task_id=f"r{i:02d}", text=f"annotation record {i}") for i in range(18)]
    tasks.append(Task(task_id="t0", text="hidden probe zero",
                      is_test=True, gold_label="discrimination"))
    tasks.append(Task(task_id="t1", text="hidden probe one",
                      is_test=True, gold_label="no_discrimination"))
    return AnnotationService(tasks, min_judgments=2, test_rate=10, history_csv=hist)


def gate_service() -> AnnotationService:
    tasks = [Task(task_id=f"g{i}", text=f"gate probe {i}",
                  is_test=True, gold_label="discrimination") for i in range(6)]
    tasks.append(Task(task_id="spare", text="never reached"))
    return AnnotationService(tasks, min_judgments=1, test_rate=1)


def serve(service: AnnotationService, port: int) -> threading.Thread:
    config = uvicorn.Config(build_app(service), host="127.0.0.1", port=port,
                            log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    return thread


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--session-port", type=int, required=True)
    parser.add_argument("--gate-port", type=int, required=True)
    args = parser.parse_args()
    a = serve(session_service(), args.session_port)
    b = serve(gate_service(), args.gate_port)
    a.join()
    b.join()


if __name__ == "__main__":
    main()
