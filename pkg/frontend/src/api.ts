/** Typed client for the /v1 API.
 *
 * Every call maps one-to-one onto a documented endpoint; nothing the server
 * persists is recomputed here. Failures become ApiError carrying the server's
 * error envelope so callers can branch on the code and status.
 */

import type { CoaView, ModelSpecBody, ReportView, SessionView } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly detail: unknown = null,
  ) {
    super(message);
    this.name = "ApiError";
  }

  /** Stale selection or wrong session state; the fix is a reload. */
  get isConflict(): boolean {
    return this.status === 409;
  }
}

async function parseError(response: Response): Promise<ApiError> {
  try {
    const body = (await response.json()) as {
      error?: { code?: string; message?: string; detail?: unknown };
    };
    if (body.error && body.error.code && body.error.message) {
      return new ApiError(response.status, body.error.code, body.error.message, body.error.detail);
    }
  } catch {
    // non-JSON error body; fall through to the generic shape
  }
  return new ApiError(response.status, "HttpError", `${response.status} ${response.statusText}`);
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  private async send(method: string, path: string, body?: unknown): Promise<Response> {
    let response: Response;
    try {
      response = await fetch(this.base + path, {
        method,
        headers: body === undefined ? undefined : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (cause) {
      throw new ApiError(0, "NetworkError", `request to ${path} failed: ${String(cause)}`);
    }
    if (!response.ok) {
      throw await parseError(response);
    }
    return response;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    return (await this.send(method, path, body)).json() as Promise<T>;
  }

  createSession(model: ModelSpecBody, mission?: Record<string, unknown>): Promise<SessionView> {
    return this.request("POST", "/v1/sessions", mission ? { model, mission } : { model });
  }

  listSessions(): Promise<{ sessions: string[] }> {
    return this.request("GET", "/v1/sessions");
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/v1/sessions/${sessionId}`);
  }

  generateCoas(sessionId: string, n = 3): Promise<{ session_id: string; coas: CoaView[] }> {
    return this.request("POST", `/v1/sessions/${sessionId}/coas`, { n });
  }

  submitFeedback(
    sessionId: string,
    coaId: string,
    text: string,
  ): Promise<{ session_id: string; coa: CoaView }> {
    return this.request("POST", `/v1/sessions/${sessionId}/feedback`, { coa_id: coaId, text });
  }

  approve(sessionId: string, coaId: string): Promise<SessionView> {
    return this.request("POST", `/v1/sessions/${sessionId}/approve`, { coa_id: coaId });
  }

  analyze(sessionId: string, simsPerCoa = 10, baseSeed = 42): Promise<ReportView> {
    return this.request("POST", `/v1/sessions/${sessionId}/analyze`, {
      sims_per_coa: simsPerCoa,
      base_seed: baseSeed,
    });
  }

  /** The overlay is SVG text, injected into the map panel as-is. */
  async fetchOverlay(sessionId: string, coaId: string): Promise<string> {
    const response = await this.send(
      "GET",
      `/v1/sessions/${sessionId}/coas/${coaId}/overlay.svg`,
    );
    return response.text();
  }

  copUrl(sessionId: string): string {
    return `${this.base}/v1/sessions/${sessionId}/cop.png`;
  }
}
