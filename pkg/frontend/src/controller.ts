/** Glue between the API client, the view state, and the DOM.
 *
 * Every mutation is pessimistic: send the request, wait for the server,
 * re-fetch the session, then render. Overlays are cached per
 * (coa_id, history length) because a refinement reuses the chosen COA's id
 * while changing its contents.
 */

import { ApiClient, ApiError } from "./api.js";
import { renderDashboard, type Banner } from "./dashboard.js";
import {
  applySnapshot,
  canSubmitFeedback,
  initialState,
  selectCoa,
  setDraft,
  toggleReport,
  type ViewState,
} from "./state.js";

export class Controller {
  state: ViewState = initialState();
  private overlaySvg: string | null = null;
  private banner: Banner | null = null;
  private readonly overlayCache = new Map<string, string>();

  constructor(
    private readonly client: ApiClient,
    private readonly root: HTMLElement,
    readonly sessionId: string,
  ) {}

  async start(): Promise<void> {
    await this.refresh();
  }

  /** Pull the latest server snapshot and redraw. Safe to call from polling. */
  async refresh(): Promise<void> {
    try {
      const session = await this.client.getSession(this.sessionId);
      this.state = applySnapshot(this.state, session);
      this.banner = null;
      await this.syncOverlay();
    } catch (error) {
      this.fail(error);
    }
    this.render();
  }

  async select(coaId: string): Promise<void> {
    this.state = selectCoa(this.state, coaId);
    try {
      await this.syncOverlay();
    } catch (error) {
      this.fail(error);
    }
    this.render();
  }

  async submitFeedback(text: string): Promise<void> {
    const attempt = { ...this.state, feedbackDraft: text };
    if (!canSubmitFeedback(attempt) || this.state.selectedCoaId === null) {
      return; // blocked client-side; nothing reaches the server
    }
    try {
      await this.client.submitFeedback(this.sessionId, this.state.selectedCoaId, text);
      this.state = setDraft(this.state, "");
      await this.refresh();
    } catch (error) {
      this.fail(error);
      this.render();
    }
  }

  async approve(): Promise<void> {
    if (this.state.selectedCoaId === null) {
      return;
    }
    try {
      await this.client.approve(this.sessionId, this.state.selectedCoaId);
      await this.refresh();
    } catch (error) {
      this.fail(error);
      this.render();
    }
  }

  async analyze(simsPerCoa = 10): Promise<void> {
    try {
      await this.client.analyze(this.sessionId, simsPerCoa);
      await this.refresh();
    } catch (error) {
      this.fail(error);
      this.render();
    }
  }

  private overlayKey(): string | null {
    if (!this.state.session || this.state.selectedCoaId === null) {
      return null;
    }
    return `${this.state.selectedCoaId}:${this.state.session.history.length}`;
  }

  private async syncOverlay(): Promise<void> {
    const key = this.overlayKey();
    if (key === null) {
      this.overlaySvg = null;
      return;
    }
    let svg = this.overlayCache.get(key);
    if (svg === undefined) {
      svg = await this.client.fetchOverlay(this.sessionId, this.state.selectedCoaId!);
      this.overlayCache.set(key, svg);
    }
    this.overlaySvg = svg;
  }

  private fail(error: unknown): void {
    const conflict = error instanceof ApiError && error.isConflict;
    this.banner = {
      message: error instanceof Error ? error.message : String(error),
      conflict,
    };
  }

  render(): void {
    renderDashboard(this.root, this.state, this.overlaySvg, this.banner, {
      onSelect: (coaId) => void this.select(coaId),
      onDraftChange: (text) => {
        this.state = setDraft(this.state, text);
      },
      onSubmitFeedback: (text) => void this.submitFeedback(text),
      onApprove: () => void this.approve(),
      onAnalyze: () => void this.analyze(),
      onToggleReport: () => {
        this.state = toggleReport(this.state);
        this.render();
      },
      onRetry: () => void this.refresh(),
      onReload: () => void this.refresh(),
    });
  }
}
