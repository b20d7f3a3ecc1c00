import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import {
  FakeServer,
  SESSION_AWAITING,
  SESSION_ID,
  awaitingServer,
  fixture,
  fixtureJson,
  json,
  sessionPath,
} from "./helpers.js";

describe("api client", () => {
  it("fetches and parses a session view", async () => {
    awaitingServer();
    const session = await new ApiClient().getSession(SESSION_ID);
    expect(session.session_id).toBe(SESSION_ID);
    expect(session.status).toBe("AwaitingFeedback");
    expect(session.history[0]!.coas).toHaveLength(3);
  });

  it("posts documented bodies to documented endpoints", async () => {
    const server = new FakeServer();
    server.set("POST", sessionPath("/coas"), json({ session_id: SESSION_ID, coas: [] }));
    server.set("POST", sessionPath("/analyze"), json(fixtureJson("report.json")));
    server.install();

    const client = new ApiClient();
    await client.generateCoas(SESSION_ID, 3);
    await client.analyze(SESSION_ID, 10);

    expect(server.calls.map((c) => `${c.method} ${c.path}`)).toEqual([
      `POST ${sessionPath("/coas")}`,
      `POST ${sessionPath("/analyze")}`,
    ]);
    expect(server.calls[0]!.body).toEqual({ n: 3 });
    expect(server.calls[1]!.body).toEqual({ sims_per_coa: 10, base_seed: 42 });
  });

  it("returns overlay SVG as text", async () => {
    awaitingServer();
    const svg = await new ApiClient().fetchOverlay(SESSION_ID, "coa_id_0");
    expect(svg.startsWith("<svg")).toBe(true);
    expect(svg).toContain("arrow");
  });

  it("unwraps the server error envelope", async () => {
    const server = new FakeServer();
    server.set(
      "POST",
      sessionPath("/feedback"),
      json(fixtureJson("error_stale_coa.json"), 409),
    );
    server.install();

    const error = await new ApiClient()
      .submitFeedback(SESSION_ID, "coa_id_9", "push")
      .then(() => null)
      .catch((e: unknown) => e);
    expect(error).toBeInstanceOf(ApiError);
    const apiError = error as ApiError;
    expect(apiError.status).toBe(409);
    expect(apiError.code).toBe("UnknownCoa");
    expect(apiError.isConflict).toBe(true);
    expect(apiError.message).toContain("coa_id_9");
  });

  it("wraps non-JSON failures in a generic error", async () => {
    const server = new FakeServer();
    server.set("GET", sessionPath(), { body: "gateway exploded", status: 502, contentType: "text/plain" });
    server.install();

    const error = await new ApiClient()
      .getSession(SESSION_ID)
      .then(() => null)
      .catch((e: unknown) => e as ApiError);
    expect(error?.code).toBe("HttpError");
    expect(error?.status).toBe(502);
  });

  it("flags transport failures as network errors", async () => {
    globalThis.fetch = (() => Promise.reject(new TypeError("connection refused"))) as typeof fetch;
    const error = await new ApiClient()
      .getSession(SESSION_ID)
      .then(() => null)
      .catch((e: unknown) => e as ApiError);
    expect(error?.code).toBe("NetworkError");
    expect(error?.status).toBe(0);
    expect(error?.isConflict).toBe(false);
  });

  it("reads fixture payloads that match the session id", () => {
    // guards against regenerated fixtures drifting apart
    expect(SESSION_AWAITING.session_id).toBe(SESSION_ID);
    expect(fixture("overlay_h1.svg")).toContain("arrow-engage");
  });
});
