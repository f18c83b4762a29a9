/**
 * Typed client for the annotation service HTTP JSON API.
 *
 * Every number and string shown in the UI comes straight from these payloads;
 * nothing is recomputed client-side. The one piece of configuration is the
 * service base URL.
 */

export const DISCRIMINATION = "discrimination";
export const NO_DISCRIMINATION = "no_discrimination";
export type Label = typeof DISCRIMINATION | typeof NO_DISCRIMINATION;

export interface TaskView {
  task_id: string;
  text: string;
  sensitivity_notice: string;
  criterion: string;
  is_adjudication: boolean;
}

export interface Vote {
  label: string;
  trust: number;
}

export interface ConflictView {
  task_id: string;
  text: string;
  votes: Vote[];
  margin: number;
}

export interface JudgmentAck {
  recorded: boolean;
  task_id: string;
  annotator_active: boolean;
}

export interface AnnotatorView {
  annotator_id: string;
  trust: number;
  test_seen: number;
  test_correct: number;
  active: boolean;
  completed: number;
  payment_retained: boolean;
}

export interface SummaryView {
  resolved: number;
  pending: number;
  conflicts: number;
  mean_confidence: number;
}

export class ApiError extends Error {
  constructor(readonly status: number, readonly detail: string) {
    super(`${status}: ${detail}`);
  }
}

let baseUrl = "http://127.0.0.1:8321";

export function setBaseUrl(url: string): void {
  baseUrl = url.replace(/\/+$/, "");
}

export function getBaseUrl(): string {
  return baseUrl;
}

async function request(path: string, init?: RequestInit): Promise<Response> {
  const resp = await fetch(baseUrl + path, init);
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: unknown };
      if (typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return resp;
}

type TaskPayload = Omit<TaskView, "is_adjudication">;

export async function nextTask(annotator: string): Promise<TaskView | null> {
  const resp = await request(`/tasks/next?annotator=${encodeURIComponent(annotator)}`);
  const body = (await resp.json()) as { task: TaskPayload | null };
  return body.task === null ? null : { ...body.task, is_adjudication: false };
}

export async function submitJudgment(
  taskId: string,
  annotator: string,
  label: Label,
): Promise<JudgmentAck> {
  const resp = await request("/judgments", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ task_id: taskId, annotator, label }),
  });
  return (await resp.json()) as JudgmentAck;
}

export async function conflicts(): Promise<ConflictView[]> {
  const resp = await request("/tasks/conflicts");
  const body = (await resp.json()) as { conflicts: ConflictView[] };
  return body.conflicts;
}

export async function adjudicate(
  taskId: string,
  label: Label,
  adjudicator: string,
): Promise<void> {
  await request(`/tasks/${encodeURIComponent(taskId)}/adjudicate`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ label, adjudicator }),
  });
}

export async function exportLabels(): Promise<string> {
  return (await request("/export/labels")).text();
}

export async function summary(): Promise<SummaryView> {
  return (await request("/export/summary")).json() as Promise<SummaryView>;
}

export async function annotatorInfo(annotator: string): Promise<AnnotatorView> {
  const resp = await request(`/annotators/${encodeURIComponent(annotator)}`);
  return (await resp.json()) as AnnotatorView;
}

export async function historyCsv(): Promise<string> {
  return (await request("/history")).text();
}
