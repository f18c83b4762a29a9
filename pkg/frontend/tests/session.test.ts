/**
 * Scripted browser session against a live annotation service.
 *
 * Two services are started by the global setup: one seeded for a full
 * labeling session with a plantable conflict, one tuned so an annotator
 * trips the trust gate quickly.  Tests in this file are order-dependent
 * and share server state, so they run sequentially (no file parallelism).
 */
import { expect, test } from "vitest";

import {
  ApiError,
  DISCRIMINATION,
  NO_DISCRIMINATION,
  annotatorInfo,
  exportLabels,
  nextTask,
  setBaseUrl,
  submitJudgment,
  summary,
  type Label,
} from "../src/api.js";
import { createSession, flush, loadNext, type Session } from "../src/state.js";
import { renderLabelView } from "../src/label.js";
import {
  createAdjudication,
  loadConflicts,
  renderAdjudicateView,
  resolve,
} from "../src/adjudicate.js";
import { parseHistoryCsv, renderDashboard } from "../src/dashboard.js";
import { renderProfile } from "../src/profile.js";
import { GATE_URL, SESSION_URL } from "./ports.js";

function mount(): HTMLElement {
  document.body.innerHTML = '<div id="app"></div>';
  return document.getElementById("app") as HTMLElement;
}

async function until(cond: () => boolean, ms = 8000): Promise<void> {
  const deadline = Date.now() + ms;
  while (Date.now() < deadline) {
    if (cond()) return;
    await new Promise((r) => setTimeout(r, 10));
  }
  throw new Error("condition never became true");
}

function shownTaskId(root: HTMLElement): string | null {
  const node = root.querySelector<HTMLElement>(".task-text");
  return node?.dataset.taskId ?? null;
}

function terminal(root: HTMLElement): boolean {
  return (
    root.querySelector(".queue-empty, .removal-notice, .stop-summary, .retry-banner") !== null
  );
}

/** Label whatever task is on screen and wait for the view to move on. */
async function labelShown(
  root: HTMLElement,
  choose: (taskId: string) => Label,
  viaKeyboard: boolean,
): Promise<string> {
  const tid = shownTaskId(root);
  if (tid === null) throw new Error("no task on screen");
  const label = choose(tid);
  if (viaKeyboard) {
    const key = label === DISCRIMINATION ? "1" : "2";
    document.dispatchEvent(new KeyboardEvent("keydown", { key }));
  } else {
    const button = root.querySelector<HTMLButtonElement>(`button[data-label='${label}']`);
    if (!button) throw new Error(`no button for ${label}`);
    button.click();
  }
  await until(() => shownTaskId(root) !== tid || terminal(root));
  return tid;
}

function startView(root: HTMLElement, s: Session): () => void {
  const rerender = (): void => renderLabelView(root, s, rerender);
  return rerender;
}

test("alice completes 20 labels including 2 hidden tests, surviving a forced reload", async () => {
  setBaseUrl(SESSION_URL);
  const served: string[] = [];
  const choose = (tid: string): Label =>
    tid === "t1" ? NO_DISCRIMINATION : DISCRIMINATION;

  let root = mount();
  let s = createSession("alice");
  let rerender = startView(root, s);
  await loadNext(s);
  rerender();

  // the view mirrors the service payload exactly
  const payload = s.current;
  expect(payload).not.toBeNull();
  if (payload) {
    expect(root.querySelector(".criterion")?.textContent).toBe(payload.criterion);
    expect(root.querySelector(".sensitivity")?.textContent).toBe(payload.sensitivity_notice);
    expect(payload.criterion.length).toBeGreaterThan(0);
    expect(payload.sensitivity_notice.length).toBeGreaterThan(0);
  }

  // five labels, two of them through the keyboard shortcuts
  for (let i = 0; i < 5; i++) {
    served.push(await labelShown(root, choose, i === 1 || i === 2));
    expect(shownTaskId(root)).not.toBeNull(); // next task auto-fetched
  }

  // task six is on screen; force a page reload before judging it
  const beforeReload = shownTaskId(root);
  root = mount();
  s = createSession("alice");
  rerender = startView(root, s);
  await loadNext(s);
  rerender();
  // the same outstanding task comes back, nothing is skipped or repeated
  expect(shownTaskId(root)).toBe(beforeReload);

  while (!terminal(root)) {
    served.push(await labelShown(root, choose, false));
  }
  expect(root.querySelector(".queue-empty")).not.toBeNull();

  expect(served).toHaveLength(20);
  const probes = served.filter((tid) => tid === "t0" || tid === "t1");
  expect(probes).toHaveLength(2);
  // hidden checks arrive on a fixed cadence
  expect(served[9]).toMatch(/^t[01]$/);
  expect(served[19]).toMatch(/^t[01]$/);
  // no duplicates across the whole session, reload included
  expect(new Set(served).size).toBe(20);

  const info = await annotatorInfo("alice");
  expect(info.completed).toBe(20);
  expect(info.trust).toBe(1);
  expect(info.test_seen).toBe(2);
  expect(info.test_correct).toBe(2);
});

test("resending a recorded judgment is rejected and never double-counted", async () => {
  setBaseUrl(SESSION_URL);
  // a raw resend of an already-recorded judgment is refused
  await expect(submitJudgment("r01", "alice", DISCRIMINATION)).rejects.toMatchObject({
    status: 409,
  });

  // the state layer drops the duplicate without touching the local count
  const s = createSession("alice");
  s.inFlight = { task_id: "r01", label: DISCRIMINATION };
  await flush(s);
  expect(s.inFlight).toBeNull();
  expect(s.completed).toBe(0);

  const info = await annotatorInfo("alice");
  expect(info.completed).toBe(20);
});

test("bob's mirrored session seeds exactly one conflict", async () => {
  setBaseUrl(SESSION_URL);
  const served: string[] = [];
  const choose = (tid: string): Label =>
    tid === "t1" || tid === "r00" ? NO_DISCRIMINATION : DISCRIMINATION;

  const root = mount();
  const s = createSession("bob");
  const rerender = startView(root, s);
  await loadNext(s);
  rerender();

  while (!terminal(root)) {
    served.push(await labelShown(root, choose, false));
  }
  expect(served).toHaveLength(20);
  expect(served.filter((tid) => tid === "t0" || tid === "t1")).toHaveLength(2);

  const sum = await summary();
  expect(sum.conflicts).toBe(1);
  const info = await annotatorInfo("bob");
  expect(info.completed).toBe(20);
});

test("adjudicating the seeded conflict updates the export within one refresh", async () => {
  setBaseUrl(SESSION_URL);
  const root = mount();
  const st = createAdjudication("lead");
  await loadConflicts(st);
  const rerender = (): void => renderAdjudicateView(root, st, rerender);
  rerender();

  const row = root.querySelector<HTMLElement>(".conflict[data-task-id='r00']");
  expect(row).not.toBeNull();
  if (!row) return;
  expect(row.querySelectorAll(".votes li")).toHaveLength(2);
  const voteText = row.textContent ?? "";
  expect(voteText).toContain(DISCRIMINATION);
  expect(voteText).toContain(NO_DISCRIMINATION);

  const final = row.querySelector<HTMLButtonElement>(
    `button.final-label[data-label='${DISCRIMINATION}']`,
  );
  expect(final).not.toBeNull();
  final?.click();
  await until(() => root.querySelector(".queue-empty") !== null);

  // one export read after the click shows the final label
  const csv = await exportLabels();
  const lines = csv.trimEnd().split("\n");
  expect(lines[0]).toBe("task_id,text,label,confidence,provenance");
  expect(lines).toHaveLength(19); // header + all 18 resolved tasks
  const r00 = lines.filter((ln) => ln.startsWith("r00,"));
  expect(r00).toHaveLength(1);
  expect(r00[0]).toBe("r00,annotation record 0,discrimination,1.000000,adjudicated");

  const sum = await summary();
  expect(sum.conflicts).toBe(0);
  expect(sum.pending).toBe(0);
});

test("a stale conflict is refreshed, not applied twice", async () => {
  setBaseUrl(SESSION_URL);
  const st = createAdjudication("lead");
  // simulate a second adjudicator acting on a conflict already resolved
  await resolve(st, "r00", NO_DISCRIMINATION);
  expect(st.note).toContain("already resolved");
  expect(st.queue).toHaveLength(0);

  // the earlier decision stands
  const csv = await exportLabels();
  const r00 = csv
    .trimEnd()
    .split("\n")
    .filter((ln) => ln.startsWith("r00,"));
  expect(r00).toHaveLength(1);
  expect(r00[0]).toContain(",discrimination,");
});

test("dashboard F1 curve equals the history CSV values byte for byte", async () => {
  setBaseUrl(SESSION_URL);
  const root = mount();
  await renderDashboard(root);

  const raw = await (await fetch(`${SESSION_URL}/history`)).text();
  const table = parseHistoryCsv(raw);
  const f1Col = table.header.indexOf("mean_f1");
  expect(f1Col).toBeGreaterThanOrEqual(0);
  const expected = table.rows.map((r) => r[f1Col]);
  expect(expected).toEqual(["0.81", "0.84", "0.86"]);

  const dots = Array.from(root.querySelectorAll("circle.f1-point"));
  expect(dots.map((d) => d.getAttribute("data-f1"))).toEqual(expected);

  const cells = Array.from(root.querySelectorAll(".history-table tr"))
    .slice(1)
    .map((tr) => tr.children[f1Col]?.textContent ?? "");
  expect(cells).toEqual(expected);
});

test("profile view shows the service's own numbers", async () => {
  setBaseUrl(SESSION_URL);
  const root = mount();
  await renderProfile(root, "alice");
  const text = root.textContent ?? "";
  expect(text).toContain("alice");
  expect(text).toContain("2 of 2");
  expect(text).toContain("20");
  expect(text).toContain("active");
  expect(root.querySelector(".credit-note")).not.toBeNull();
});

test("a trust-gated annotator sees the removal notice and gets no more tasks", async () => {
  setBaseUrl(GATE_URL);
  const root = mount();
  const s = createSession("mallory");
  const rerender = startView(root, s);
  await loadNext(s);
  rerender();

  // three wrong answers on hidden checks, then two right ones
  const answers: Label[] = [
    NO_DISCRIMINATION,
    NO_DISCRIMINATION,
    NO_DISCRIMINATION,
    DISCRIMINATION,
    DISCRIMINATION,
  ];
  for (const label of answers) {
    const tid = shownTaskId(root);
    expect(tid).not.toBeNull();
    const button = root.querySelector<HTMLButtonElement>(`button[data-label='${label}']`);
    button?.click();
    await until(() => shownTaskId(root) !== tid || terminal(root));
  }

  const notice = root.querySelector(".removal-notice");
  expect(notice).not.toBeNull();
  expect(notice?.textContent).toContain("removed");
  expect(notice?.textContent).toContain("credited");
  expect(shownTaskId(root)).toBeNull();

  // the service refuses further tasks outright
  await expect(nextTask("mallory")).rejects.toMatchObject({ status: 403 });
  const err = await nextTask("mallory").catch((e: unknown) => e);
  expect(err).toBeInstanceOf(ApiError);
  expect((err as ApiError).detail).toContain("deactivated");

  // completed work stays credited
  const info = await annotatorInfo("mallory");
  expect(info.active).toBe(false);
  expect(info.completed).toBe(5);
  expect(info.payment_retained).toBe(true);
});

test("stopping early preserves completed work and shows the session summary", async () => {
  setBaseUrl(GATE_URL);
  const root = mount();
  const s = createSession("charlie");
  const rerender = startView(root, s);
  await loadNext(s);
  rerender();

  // one correct label, then stop with the next task already on screen
  await labelShown(root, () => DISCRIMINATION, false);
  expect(shownTaskId(root)).not.toBeNull();

  const stop = root.querySelector<HTMLButtonElement>("button.stop-now");
  expect(stop).not.toBeNull();
  stop?.click();
  await until(() => root.querySelector(".stop-summary") !== null);
  await until(() => (root.querySelector(".stop-count")?.textContent ?? "").includes("1"));
  expect(root.querySelector(".stop-credit")).not.toBeNull();

  const info = await annotatorInfo("charlie");
  expect(info.completed).toBe(1);
  expect(info.payment_retained).toBe(true);
});
