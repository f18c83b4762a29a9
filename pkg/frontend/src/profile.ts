/**
 * The annotator's own trust and accuracy, straight from the service.
 */

import { annotatorInfo } from "./api.js";

export async function renderProfile(root: HTMLElement, annotator: string): Promise<void> {
  root.textContent = "";
  const info = await annotatorInfo(annotator);
  const rows: [string, string][] = [
    ["annotator", info.annotator_id],
    ["trust", String(info.trust)],
    ["hidden checks passed", `${info.test_correct} of ${info.test_seen}`],
    ["tasks completed", String(info.completed)],
    ["status", info.active ? "active" : "removed"],
  ];
  const list = document.createElement("dl");
  list.className = "profile";
  for (const [name, value] of rows) {
    const dt = document.createElement("dt");
    dt.textContent = name;
    const dd = document.createElement("dd");
    dd.textContent = value;
    list.appendChild(dt);
    list.appendChild(dd);
  }
  root.appendChild(list);
  if (info.payment_retained) {
    const note = document.createElement("div");
    note.className = "credit-note";
    note.textContent = "Completed work is credited even after stopping.";
    root.appendChild(note);
  }
}
