/** Test support: captured /v1 payloads and a fetch stub that serves them.
 *
 * The JSON and SVG files under fixtures/ are real responses recorded from the
 * HTTP service running over its own replay fixtures, so these tests exercise
 * genuine server payloads without a server process.
 */

import { readFileSync } from "node:fs";
import { resolve } from "node:path";

import type { ReportView, SessionView } from "../src/types.js";

// vitest runs with cwd at the package root; import.meta.url is rewritten
// under the DOM test environment, so resolve fixtures from cwd instead
export function fixture(name: string): string {
  return readFileSync(resolve(process.cwd(), "test", "fixtures", name), "utf-8");
}

export function fixtureJson<T>(name: string): T {
  return JSON.parse(fixture(name)) as T;
}

export const SESSION_AWAITING = fixtureJson<SessionView>("session_awaiting.json");
export const SESSION_AFTER_H1 = fixtureJson<SessionView>("session_after_h1.json");
export const SESSION_APPROVED = fixtureJson<SessionView>("session_approved.json");
export const SESSION_ANALYZED = fixtureJson<SessionView>("session_analyzed.json");
export const REPORT = fixtureJson<ReportView>("report.json");
export const SESSION_ID = SESSION_AWAITING.session_id;
export const FEEDBACK_H1 = SESSION_AFTER_H1.history[1]!.feedback!;

export interface Reply {
  body: string;
  status?: number;
  contentType?: string;
}

export function json(payload: unknown, status = 200): Reply {
  return { body: JSON.stringify(payload), status, contentType: "application/json" };
}

export function svg(text: string): Reply {
  return { body: text, contentType: "image/svg+xml" };
}

interface RecordedCall {
  method: string;
  path: string;
  body: unknown;
}

/** Routes `${method} ${path}` to canned replies; unknown routes fail the test. */
export class FakeServer {
  calls: RecordedCall[] = [];
  private readonly routes = new Map<string, Reply>();

  set(method: string, path: string, reply: Reply): this {
    this.routes.set(`${method} ${path}`, reply);
    return this;
  }

  install(): void {
    globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
      const method = init?.method ?? "GET";
      const path = String(input);
      this.calls.push({
        method,
        path,
        body: typeof init?.body === "string" ? JSON.parse(init.body) : null,
      });
      const reply = this.routes.get(`${method} ${path}`);
      if (!reply) {
        throw new Error(`no stubbed route for ${method} ${path}`);
      }
      return new Response(reply.body, {
        status: reply.status ?? 200,
        headers: { "content-type": reply.contentType ?? "application/json" },
      });
    }) as typeof fetch;
  }

  requestsTo(method: string, path: string): RecordedCall[] {
    return this.calls.filter((c) => c.method === method && c.path === path);
  }
}

export function sessionPath(suffix = ""): string {
  return `/v1/sessions/${SESSION_ID}${suffix}`;
}

/** A server preloaded with the state right after COA generation. */
export function awaitingServer(): FakeServer {
  const server = new FakeServer();
  server.set("GET", sessionPath(), json(SESSION_AWAITING));
  server.set("GET", sessionPath("/coas/coa_id_0/overlay.svg"), svg(fixture("overlay_coa0.svg")));
  server.set("GET", sessionPath("/coas/coa_id_1/overlay.svg"), svg(fixture("overlay_coa1.svg")));
  server.install();
  return server;
}

export function freshRoot(): HTMLElement {
  document.body.innerHTML = '<div id="app"></div>';
  return document.getElementById("app")!;
}
