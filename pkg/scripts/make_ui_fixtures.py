"""Capture real /v1 payloads for the frontend test suite.

Drives the HTTP app through the recorded demo session and snapshots every
response the dashboard consumes. The frontend tests replay these against a
stubbed fetch, so they exercise genuine server payloads without a server.

Run from the repository root:

    python3 scripts/make_ui_fixtures.py
"""
from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "src"))

from coa_forge.api import create_app  # noqa: E402
from coa_forge.session import FEEDBACK_H1, FEEDBACK_H2  # noqa: E402

OUT_DIR = REPO_ROOT / "frontend" / "test" / "fixtures"
REPLAY_MODEL = {
    "backend": "replay",
    "model_id": "gpt-4-1106-preview",
    "fixture_path": str(REPO_ROOT / "fixtures" / "session_demo.jsonl"),
}


def dump_json(name: str, payload: dict) -> None:
    (OUT_DIR / name).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {name}")


def dump_text(name: str, text: str) -> None:
    (OUT_DIR / name).write_text(text, encoding="utf-8")
    print(f"wrote {name}")


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as store:
        client = TestClient(create_app(store_dir=store))

        created = client.post("/v1/sessions", json={"model": REPLAY_MODEL})
        assert created.status_code == 201, created.text
        session_id = created.json()["session_id"]
        dump_json("session_created.json", created.json())

        generated = client.post(f"/v1/sessions/{session_id}/coas", json={"n": 3})
        assert generated.status_code == 200, generated.text
        dump_json("generate_response.json", generated.json())
        dump_json("session_awaiting.json", client.get(f"/v1/sessions/{session_id}").json())

        overlay0 = client.get(f"/v1/sessions/{session_id}/coas/coa_id_0/overlay.svg")
        dump_text("overlay_coa0.svg", overlay0.text)
        overlay1 = client.get(f"/v1/sessions/{session_id}/coas/coa_id_1/overlay.svg")
        dump_text("overlay_coa1.svg", overlay1.text)

        stale = client.post(
            f"/v1/sessions/{session_id}/feedback",
            json={"coa_id": "coa_id_9", "text": "push"},
        )
        assert stale.status_code == 409, stale.text
        dump_json("error_stale_coa.json", stale.json())

        refined = client.post(
            f"/v1/sessions/{session_id}/feedback",
            json={"coa_id": "coa_id_0", "text": FEEDBACK_H1},
        )
        assert refined.status_code == 200, refined.text
        dump_json("feedback_h1_response.json", refined.json())
        dump_json("session_after_h1.json", client.get(f"/v1/sessions/{session_id}").json())

        overlay_h1 = client.get(f"/v1/sessions/{session_id}/coas/coa_id_0/overlay.svg")
        engage_arrows = overlay_h1.text.count('class="arrow arrow-engage"')
        assert engage_arrows == 2, f"expected 2 engage arrows, found {engage_arrows}"
        dump_text("overlay_h1.svg", overlay_h1.text)

        final = client.post(
            f"/v1/sessions/{session_id}/feedback",
            json={"coa_id": "coa_id_0", "text": FEEDBACK_H2},
        )
        assert final.status_code == 200, final.text
        dump_json("session_after_h2.json", client.get(f"/v1/sessions/{session_id}").json())

        approved = client.post(
            f"/v1/sessions/{session_id}/approve", json={"coa_id": "coa_id_0"}
        )
        assert approved.status_code == 200, approved.text
        dump_json("session_approved.json", approved.json())

        analyzed = client.post(f"/v1/sessions/{session_id}/analyze", json={"sims_per_coa": 3})
        assert analyzed.status_code == 200, analyzed.text
        dump_json("report.json", analyzed.json())
        dump_json("session_analyzed.json", client.get(f"/v1/sessions/{session_id}").json())

        missing = client.get("/v1/sessions/ffffffffffff")
        assert missing.status_code == 404
        dump_json("error_not_found.json", missing.json())


if __name__ == "__main__":
    main()
