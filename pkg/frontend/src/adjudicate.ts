/**
 * Conflict queue for adjudicators.
 *
 * Lists every task whose trusted votes tie, with both judgments' labels and
 * trust weights, and applies a one-click final label. A conflict resolved
 * elsewhere in the meantime is refreshed away, never double-applied.
 */

import {
  ApiError,
  ConflictView,
  DISCRIMINATION,
  Label,
  NO_DISCRIMINATION,
  TaskView,
  adjudicate,
  conflicts,
} from "./api.js";

export interface AdjudicationState {
  adjudicator: string;
  queue: ConflictView[];
  note: string;
}

export function createAdjudication(adjudicator: string): AdjudicationState {
  return { adjudicator, queue: [], note: "" };
}

export async function loadConflicts(st: AdjudicationState): Promise<void> {
  st.queue = await conflicts();
}

export async function resolve(
  st: AdjudicationState,
  taskId: string,
  label: Label,
): Promise<void> {
  try {
    await adjudicate(taskId, label, st.adjudicator);
    st.note = `${taskId} resolved as ${label}`;
  } catch (err) {
    if (err instanceof ApiError && (err.status === 409 || err.status === 404)) {
      st.note = `${taskId} was already resolved elsewhere`;
    } else {
      throw err;
    }
  }
  await loadConflicts(st);
}

function asTaskView(c: ConflictView): TaskView {
  return {
    task_id: c.task_id,
    text: c.text,
    sensitivity_notice: "",
    criterion: "",
    is_adjudication: true,
  };
}

export function renderAdjudicateView(
  root: HTMLElement,
  st: AdjudicationState,
  rerender: () => void,
): void {
  root.textContent = "";
  if (st.note) {
    const note = document.createElement("div");
    note.className = "adjudication-note";
    note.textContent = st.note;
    root.appendChild(note);
  }
  if (st.queue.length === 0) {
    const empty = document.createElement("div");
    empty.className = "queue-empty";
    empty.textContent = "No conflicts to adjudicate.";
    root.appendChild(empty);
    return;
  }
  for (const c of st.queue) {
    const task = asTaskView(c);
    const row = document.createElement("div");
    row.className = "conflict";
    row.dataset.taskId = task.task_id;

    const text = document.createElement("blockquote");
    text.className = "task-text";
    text.textContent = task.text;
    row.appendChild(text);

    const votes = document.createElement("ul");
    votes.className = "votes";
    for (const v of c.votes) {
      const item = document.createElement("li");
      item.textContent = `${v.label} (trust ${v.trust})`;
      votes.appendChild(item);
    }
    row.appendChild(votes);

    const margin = document.createElement("div");
    margin.className = "margin";
    margin.textContent = `margin ${c.margin}`;
    row.appendChild(margin);

    for (const label of [DISCRIMINATION, NO_DISCRIMINATION] as Label[]) {
      const b = document.createElement("button");
      b.className = "final-label";
      b.dataset.label = label;
      b.textContent = `Final: ${label}`;
      b.onclick = () => {
        void resolve(st, task.task_id, label).then(rerender);
      };
      row.appendChild(b);
    }
    root.appendChild(row);
  }
}
