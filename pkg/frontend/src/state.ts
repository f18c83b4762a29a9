/**
 * Labeling session state.
 *
 * The state is a pure function of service responses plus at most one
 * in-flight judgment. Reloading the page rebuilds it from the service: the
 * outstanding task comes back from /tasks/next, and resending a judgment the
 * service already holds is answered with 409 and dropped without recounting,
 * so a reload can never duplicate work.
 */

import {
  ApiError,
  Label,
  TaskView,
  nextTask,
  submitJudgment,
} from "./api.js";

export interface PendingJudgment {
  task_id: string;
  label: Label;
}

export interface Session {
  annotator: string;
  current: TaskView | null;
  inFlight: PendingJudgment | null;
  completed: number; // local running count; summary views show the service number
  deactivated: boolean;
  stopped: boolean;
  offline: boolean;
  drained: boolean;
}

export function createSession(annotator: string): Session {
  return {
    annotator,
    current: null,
    inFlight: null,
    completed: 0,
    deactivated: false,
    stopped: false,
    offline: false,
    drained: false,
  };
}

export async function loadNext(s: Session): Promise<void> {
  if (s.deactivated || s.stopped) return;
  try {
    const task = await nextTask(s.annotator);
    s.current = task;
    s.drained = task === null;
    s.offline = false;
  } catch (err) {
    if (err instanceof ApiError && err.status === 403) {
      s.deactivated = true;
      s.current = null;
    } else {
      s.offline = true;
    }
  }
}

/** Record a judgment for the displayed task and fetch the next one. */
export async function judge(s: Session, label: Label): Promise<void> {
  if (!s.current || s.inFlight || s.deactivated || s.stopped) return;
  s.inFlight = { task_id: s.current.task_id, label };
  await flush(s);
}

/** Send the in-flight judgment; on network failure it stays queued for retry. */
export async function flush(s: Session): Promise<void> {
  if (!s.inFlight) return;
  try {
    const ack = await submitJudgment(s.inFlight.task_id, s.annotator, s.inFlight.label);
    s.completed += 1;
    s.inFlight = null;
    s.current = null;
    s.offline = false;
    if (!ack.annotator_active) {
      s.deactivated = true;
      return;
    }
    await loadNext(s); // optimistic fetch after acknowledgment
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      // the service already holds this judgment (resent after a reload)
      s.inFlight = null;
      s.current = null;
      await loadNext(s);
    } else if (err instanceof ApiError && err.status === 403) {
      s.deactivated = true;
      s.inFlight = null;
      s.current = null;
    } else {
      s.offline = true;
    }
  }
}

/** Explicit exit; completed work stays submitted and credited. */
export function stop(s: Session): void {
  s.stopped = true;
}
