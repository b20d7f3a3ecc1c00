/** View state and its invariants.
 *
 * The server snapshot is the source of truth; this module only tracks what
 * the commander is looking at. The one hard rule: the selected coa_id always
 * refers to the latest COA set, so a refresh can never leave a stale
 * selection behind.
 */

import type { CoaView, SessionView } from "./types.js";

export interface ViewState {
  session: SessionView | null;
  selectedCoaId: string | null;
  feedbackDraft: string;
  showReport: boolean;
}

export function initialState(): ViewState {
  return { session: null, selectedCoaId: null, feedbackDraft: "", showReport: true };
}

/** COAs from the newest history entry; empty before the first generation. */
export function latestCoas(state: ViewState): CoaView[] {
  const history = state.session?.history ?? [];
  return history.length > 0 ? history[history.length - 1]!.coas : [];
}

export function selectedCoa(state: ViewState): CoaView | null {
  return latestCoas(state).find((c) => c.coa_id === state.selectedCoaId) ?? null;
}

/** Absorb a fresh server snapshot, clamping the selection to the latest set. */
export function applySnapshot(state: ViewState, session: SessionView): ViewState {
  const next = { ...state, session };
  const coas = latestCoas(next);
  if (!coas.some((c) => c.coa_id === next.selectedCoaId)) {
    next.selectedCoaId = coas.length > 0 ? coas[0]!.coa_id : null;
  }
  return next;
}

/** Selecting something outside the latest set is a no-op, not an error. */
export function selectCoa(state: ViewState, coaId: string): ViewState {
  if (!latestCoas(state).some((c) => c.coa_id === coaId)) {
    return state;
  }
  return { ...state, selectedCoaId: coaId };
}

export function setDraft(state: ViewState, text: string): ViewState {
  return { ...state, feedbackDraft: text };
}

export function toggleReport(state: ViewState): ViewState {
  return { ...state, showReport: !state.showReport };
}

export function canSubmitFeedback(state: ViewState): boolean {
  return (
    state.session?.status === "AwaitingFeedback" &&
    state.selectedCoaId !== null &&
    state.feedbackDraft.trim().length > 0
  );
}

export function canApprove(state: ViewState): boolean {
  return state.session?.status === "AwaitingFeedback" && state.selectedCoaId !== null;
}

export function canAnalyze(state: ViewState): boolean {
  return state.session?.status === "Approved" || state.session?.status === "Analyzed";
}
