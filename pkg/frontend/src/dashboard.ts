/** DOM rendering for the commander dashboard.
 *
 * renderDashboard is a pure function of (state, overlay, banner): it rebuilds
 * the whole view on every call. No optimistic state lives in the DOM; every
 * control simply reports intent through the callbacks and waits for the next
 * render after the server confirms.
 */

import { buildMetricsPanel } from "./metrics.js";
import {
  canAnalyze,
  canApprove,
  canSubmitFeedback,
  latestCoas,
  type ViewState,
} from "./state.js";
import type { HistoryEntryView } from "./types.js";

export interface Banner {
  message: string;
  conflict: boolean;
}

export interface DashboardCallbacks {
  onSelect(coaId: string): void;
  onDraftChange(text: string): void;
  onSubmitFeedback(text: string): void;
  onApprove(): void;
  onAnalyze(): void;
  onToggleReport(): void;
  onRetry(): void;
  onReload(): void;
}

export function renderDashboard(
  root: HTMLElement,
  state: ViewState,
  overlaySvg: string | null,
  banner: Banner | null,
  cb: DashboardCallbacks,
): void {
  const doc = root.ownerDocument;
  root.innerHTML = "";

  root.appendChild(renderHeader(doc, state));
  if (banner) {
    root.appendChild(renderBanner(doc, banner, cb));
  }

  const layout = doc.createElement("div");
  layout.className = "layout";

  const side = doc.createElement("aside");
  side.className = "side-panel";
  side.appendChild(renderCards(doc, state, cb));
  side.appendChild(renderComposer(doc, state, cb));
  side.appendChild(renderControls(doc, state, cb));
  side.appendChild(renderHistory(doc, state));
  layout.appendChild(side);

  const mainPanel = doc.createElement("main");
  mainPanel.className = "map-panel";
  mainPanel.appendChild(renderOverlay(doc, overlaySvg));
  const report = state.session?.report;
  if (report && state.showReport) {
    const metrics = doc.createElement("div");
    metrics.id = "metrics";
    metrics.appendChild(buildMetricsPanel(report, doc));
    mainPanel.appendChild(metrics);
  }
  layout.appendChild(mainPanel);

  root.appendChild(layout);
}

function renderHeader(doc: Document, state: ViewState): HTMLElement {
  const header = doc.createElement("header");
  const title = doc.createElement("h1");
  title.textContent = "Commander Dashboard";
  header.appendChild(title);

  const badge = doc.createElement("span");
  badge.className = "state-badge";
  const status = state.session?.status ?? "NoSession";
  badge.dataset["status"] = status;
  badge.textContent = status;
  header.appendChild(badge);

  const mission = doc.createElement("p");
  mission.className = "mission-objective";
  mission.textContent = state.session?.mission.objective_text ?? "No session loaded.";
  header.appendChild(mission);
  return header;
}

function renderBanner(doc: Document, banner: Banner, cb: DashboardCallbacks): HTMLElement {
  const el = doc.createElement("div");
  el.className = "error-banner";
  el.setAttribute("role", "alert");

  const text = doc.createElement("span");
  text.className = "error-message";
  text.textContent = banner.conflict
    ? `${banner.message} (the session moved on; reload to continue)`
    : banner.message;
  el.appendChild(text);

  const action = doc.createElement("button");
  action.className = "banner-action";
  action.textContent = banner.conflict ? "Reload" : "Retry";
  action.addEventListener("click", () => (banner.conflict ? cb.onReload() : cb.onRetry()));
  el.appendChild(action);
  return el;
}

function renderCards(doc: Document, state: ViewState, cb: DashboardCallbacks): HTMLElement {
  const section = doc.createElement("section");
  section.id = "coa-cards";
  const heading = doc.createElement("h2");
  heading.textContent = "Courses of action";
  section.appendChild(heading);

  for (const coa of latestCoas(state)) {
    const card = doc.createElement("article");
    card.className = coa.coa_id === state.selectedCoaId ? "coa-card selected" : "coa-card";
    card.dataset["coaId"] = coa.coa_id;

    const name = doc.createElement("h3");
    name.className = "coa-name";
    name.textContent = coa.name;
    card.appendChild(name);

    const overview = doc.createElement("p");
    overview.className = "coa-overview";
    overview.textContent = coa.overview;
    card.appendChild(overview);

    if (coa.warnings.length > 0) {
      const warnings = doc.createElement("p");
      warnings.className = "coa-warnings";
      warnings.textContent = coa.warnings.join("; ");
      card.appendChild(warnings);
    }

    card.addEventListener("click", () => cb.onSelect(coa.coa_id));
    section.appendChild(card);
  }
  return section;
}

function renderComposer(doc: Document, state: ViewState, cb: DashboardCallbacks): HTMLElement {
  const section = doc.createElement("section");
  section.id = "composer";

  const input = doc.createElement("textarea");
  input.id = "feedback-input";
  input.placeholder = "Commander feedback on the selected COA...";
  input.value = state.feedbackDraft;
  input.disabled = state.session?.status !== "AwaitingFeedback";
  input.addEventListener("input", () => cb.onDraftChange(input.value));
  section.appendChild(input);

  const submit = doc.createElement("button");
  submit.id = "feedback-submit";
  submit.textContent = "Send feedback";
  submit.disabled = !canSubmitFeedback(state);
  submit.addEventListener("click", () => {
    // empty feedback never leaves the client
    if (input.value.trim().length === 0) {
      return;
    }
    cb.onSubmitFeedback(input.value);
  });
  section.appendChild(submit);
  return section;
}

function renderControls(doc: Document, state: ViewState, cb: DashboardCallbacks): HTMLElement {
  const section = doc.createElement("section");
  section.id = "controls";

  const approve = doc.createElement("button");
  approve.id = "approve-btn";
  approve.textContent = "Approve selected COA";
  approve.disabled = !canApprove(state);
  approve.addEventListener("click", () => cb.onApprove());
  section.appendChild(approve);

  const analyze = doc.createElement("button");
  analyze.id = "analyze-btn";
  analyze.textContent = "Run analysis";
  analyze.disabled = !canAnalyze(state);
  analyze.addEventListener("click", () => cb.onAnalyze());
  section.appendChild(analyze);

  if (state.session?.report) {
    const toggle = doc.createElement("button");
    toggle.id = "report-toggle";
    toggle.textContent = state.showReport ? "Hide metrics" : "Show metrics";
    toggle.addEventListener("click", () => cb.onToggleReport());
    section.appendChild(toggle);
  }
  return section;
}

function renderHistory(doc: Document, state: ViewState): HTMLElement {
  const section = doc.createElement("section");
  section.id = "history";
  const heading = doc.createElement("h2");
  heading.textContent = "Refinement history";
  section.appendChild(heading);

  const list = doc.createElement("ol");
  list.id = "history-timeline";
  for (const entry of state.session?.history ?? []) {
    list.appendChild(renderHistoryEntry(doc, entry));
  }
  section.appendChild(list);
  return section;
}

function renderHistoryEntry(doc: Document, entry: HistoryEntryView): HTMLElement {
  const item = doc.createElement("li");
  item.className = "history-entry";

  const feedback = doc.createElement("p");
  feedback.className = "history-feedback";
  feedback.textContent = entry.feedback ?? "Initial draft";
  item.appendChild(feedback);

  const names = doc.createElement("p");
  names.className = "history-coas";
  names.textContent = entry.coas.map((c) => c.name).join(", ");
  item.appendChild(names);
  return item;
}

function renderOverlay(doc: Document, overlaySvg: string | null): HTMLElement {
  const container = doc.createElement("div");
  container.id = "overlay";
  if (overlaySvg) {
    container.innerHTML = overlaySvg;
  } else {
    const placeholder = doc.createElement("p");
    placeholder.className = "overlay-placeholder";
    placeholder.textContent = "No COA selected.";
    container.appendChild(placeholder);
  }
  return container;
}
