/**
 * App shell: hash routing between the labeling flow, the adjudication queue,
 * the active-learning dashboard, and the annotator profile.
 */

import { getBaseUrl, setBaseUrl } from "./api.js";
import {
  AdjudicationState,
  createAdjudication,
  loadConflicts,
  renderAdjudicateView,
} from "./adjudicate.js";
import { renderDashboard } from "./dashboard.js";
import { renderLabelView } from "./label.js";
import { renderProfile } from "./profile.js";
import { Session, createSession, loadNext } from "./state.js";

let session: Session | null = null;
let adjudication: AdjudicationState | null = null;

function setting(key: string, fallback: string): string {
  try {
    return window.localStorage.getItem(key) ?? fallback;
  } catch {
    return fallback;
  }
}

function saveSetting(key: string, value: string): void {
  try {
    window.localStorage.setItem(key, value);
  } catch {
    // private mode; the value just won't survive a reload
  }
}

function annotatorId(): string {
  return setting("annotator", "anonymous");
}

async function route(view: HTMLElement): Promise<void> {
  const hash = window.location.hash || "#/label";
  if (hash === "#/label") {
    if (!session || session.annotator !== annotatorId()) {
      session = createSession(annotatorId());
    }
    const s = session;
    const rerender = () => renderLabelView(view, s, rerender);
    if (!s.current && !s.stopped && !s.deactivated) await loadNext(s);
    rerender();
  } else if (hash === "#/adjudicate") {
    if (!adjudication || adjudication.adjudicator !== annotatorId()) {
      adjudication = createAdjudication(annotatorId());
    }
    const st = adjudication;
    const rerender = () => renderAdjudicateView(view, st, rerender);
    await loadConflicts(st);
    rerender();
  } else if (hash === "#/dashboard") {
    await renderDashboard(view);
  } else if (hash === "#/me") {
    await renderProfile(view, annotatorId());
  } else {
    view.textContent = "Unknown view.";
  }
}

function buildHeader(view: HTMLElement): HTMLElement {
  const header = document.createElement("header");
  const nav = document.createElement("nav");
  for (const [label, hash] of [
    ["Label", "#/label"],
    ["Adjudicate", "#/adjudicate"],
    ["Dashboard", "#/dashboard"],
    ["Me", "#/me"],
  ]) {
    const a = document.createElement("a");
    a.href = hash;
    a.textContent = label;
    nav.appendChild(a);
  }
  header.appendChild(nav);

  const who = document.createElement("input");
  who.className = "annotator-input";
  who.value = annotatorId();
  who.onchange = () => {
    saveSetting("annotator", who.value.trim() || "anonymous");
    session = null;
    adjudication = null;
    void route(view);
  };
  header.appendChild(who);

  const url = document.createElement("input");
  url.className = "service-url-input";
  url.value = setting("service_url", getBaseUrl());
  setBaseUrl(url.value);
  url.onchange = () => {
    saveSetting("service_url", url.value.trim());
    setBaseUrl(url.value.trim());
    session = null;
    adjudication = null;
    void route(view);
  };
  header.appendChild(url);
  return header;
}

export function init(root: HTMLElement): void {
  root.textContent = "";
  const view = document.createElement("main");
  root.appendChild(buildHeader(view));
  root.appendChild(view);
  window.addEventListener("hashchange", () => void route(view));
  void route(view);
}

const appRoot = document.getElementById("app");
if (appRoot) init(appRoot);
