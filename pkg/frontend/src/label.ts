/**
 * One-task-at-a-time labeling view.
 *
 * Shows the labeling criterion and sensitivity notice verbatim from the
 * service payload, the task text, two judgment buttons with keyboard
 * shortcuts (1 / 2), and a stop-now exit that keeps completed work credited.
 */

import {
  DISCRIMINATION,
  Label,
  NO_DISCRIMINATION,
  annotatorInfo,
} from "./api.js";
import { Session, flush, judge, loadNext, stop } from "./state.js";

let keyHandler: ((e: KeyboardEvent) => void) | null = null;

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function button(label: string, className: string, onClick: () => void): HTMLButtonElement {
  const b = document.createElement("button");
  b.className = className;
  b.textContent = label;
  b.onclick = onClick;
  return b;
}

export function renderLabelView(root: HTMLElement, s: Session, rerender: () => void): void {
  root.textContent = "";
  if (keyHandler) document.removeEventListener("keydown", keyHandler);
  keyHandler = null;

  if (s.stopped) {
    renderStopSummary(root, s);
    return;
  }
  if (s.deactivated) {
    root.appendChild(el("div", "removal-notice",
      "You have been removed from this task. Work you already completed stays credited."));
    return;
  }
  if (s.offline) {
    const banner = el("div", "retry-banner",
      "Service unreachable. Your last judgment is saved locally and will be resent.");
    banner.appendChild(button("Retry", "retry", () => {
      void (s.inFlight ? flush(s) : loadNext(s)).then(rerender);
    }));
    root.appendChild(banner);
    return;
  }
  if (s.drained || s.current === null) {
    root.appendChild(el("div", "queue-empty", "No tasks left. Thank you."));
    return;
  }

  const task = s.current;
  root.appendChild(el("div", "criterion", task.criterion));
  root.appendChild(el("div", "sensitivity", task.sensitivity_notice));
  const card = el("blockquote", "task-text", task.text);
  card.dataset.taskId = task.task_id;
  root.appendChild(card);

  const submit = (label: Label) => {
    void judge(s, label).then(rerender);
  };
  const controls = el("div", "controls");
  const yes = button("[1] Discrimination", "judgment", () => submit(DISCRIMINATION));
  yes.dataset.label = DISCRIMINATION;
  const no = button("[2] No discrimination", "judgment", () => submit(NO_DISCRIMINATION));
  no.dataset.label = NO_DISCRIMINATION;
  controls.appendChild(yes);
  controls.appendChild(no);
  controls.appendChild(button("Stop now", "stop-now", () => {
    stop(s);
    rerender();
  }));
  root.appendChild(controls);

  root.appendChild(el("div", "progress", `Completed this session: ${s.completed}`));

  keyHandler = (e: KeyboardEvent) => {
    if (e.key === "1") submit(DISCRIMINATION);
    else if (e.key === "2") submit(NO_DISCRIMINATION);
  };
  document.addEventListener("keydown", keyHandler);
}

function renderStopSummary(root: HTMLElement, s: Session): void {
  const box = el("div", "stop-summary", "Session ended.");
  const count = el("div", "stop-count", `Tasks completed: ${s.completed}`);
  box.appendChild(count);
  box.appendChild(el("div", "stop-credit", "Credit for completed work is retained."));
  root.appendChild(box);
  // the authoritative count comes from the service, not the local tally
  void annotatorInfo(s.annotator)
    .then((info) => {
      count.textContent = `Tasks completed: ${info.completed}`;
    })
    .catch(() => undefined);
}
