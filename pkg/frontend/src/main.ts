/** Entry point: open the session named in the query string, or list sessions
 * so the commander can pick one. All state changes flow through Controller.
 */

import { ApiClient } from "./api.js";
import { Controller } from "./controller.js";
import { startPolling } from "./polling.js";

const POLL_INTERVAL_MS = 2000;

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app container");
  }
  const client = new ApiClient("");
  const sessionId = new URLSearchParams(window.location.search).get("session");

  if (!sessionId) {
    await renderSessionPicker(root, client);
    return;
  }

  const controller = new Controller(client, root, sessionId);
  await controller.start();
  startPolling(() => controller.refresh(), POLL_INTERVAL_MS, (error) => {
    console.error("poll failed", error);
  });
}

async function renderSessionPicker(root: HTMLElement, client: ApiClient): Promise<void> {
  root.innerHTML = "";
  const heading = document.createElement("h1");
  heading.textContent = "Commander Dashboard";
  root.appendChild(heading);

  const hint = document.createElement("p");
  hint.textContent = "Pick a session, or start one with the coa-forge CLI.";
  root.appendChild(hint);

  const list = document.createElement("ul");
  list.id = "session-list";
  try {
    const { sessions } = await client.listSessions();
    for (const id of sessions) {
      const item = document.createElement("li");
      const link = document.createElement("a");
      link.href = `?session=${encodeURIComponent(id)}`;
      link.textContent = id;
      item.appendChild(link);
      list.appendChild(item);
    }
    if (sessions.length === 0) {
      const item = document.createElement("li");
      item.textContent = "No sessions yet.";
      list.appendChild(item);
    }
  } catch (error) {
    const item = document.createElement("li");
    item.textContent = `Could not list sessions: ${String(error)}`;
    list.appendChild(item);
  }
  root.appendChild(list);
}

void boot();
