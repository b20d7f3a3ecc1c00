"""Regenerate the recorded LLM fixtures under fixtures/.

A deterministic scripted responder stands in for the chat backend via an
injected httpx transport. The real orchestrator then drives full sessions in
live+record mode, so every fixture line is produced by exactly the request
the replay path will later issue (record/replay closure by construction).

Responder behavior:
  - generation requests rotate through the five playbook COA variants
    (per-request-digest call order, which is what replay's FIFO queues key on)
  - the first scripted feedback string returns the prior COA with both
    aviation units retasked onto the hostile aviation
  - the second scripted feedback string returns the split-axis COA

Run from the repository root: python3 scripts/make_fixtures.py
"""
from __future__ import annotations

import hashlib
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import httpx

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

from coa_forge.coa import coa_to_canonical_json, coas_to_canonical_json, parse_coa_document
from coa_forge.gateway import ENV_API_KEY, TEXT_MODEL, Gateway, ModelSpec
from coa_forge.playbook import apply_aviation_refinement, h2_style_coa, initial_coa_variants
from coa_forge.scenario import tigerclaw_default
from coa_forge.session import FEEDBACK_H1, FEEDBACK_H2, Orchestrator, default_mission


def _message_text(message: dict) -> str:
    content = message["content"]
    if isinstance(content, str):
        return content
    return " ".join(part.get("text", "") for part in content if isinstance(part, dict))


def _wrap(document_json: str, note: str) -> str:
    return (
        f"{note}\n\n```json\n{document_json}\n```\n\n"
        "Every friendly unit carries exactly one command."
    )


class ScriptedResponder:
    """Maps chat requests to canned COA documents, in call order per digest."""

    def __init__(self):
        self.scenario = tigerclaw_default()
        self.variants = initial_coa_variants(self.scenario)
        self._calls: dict[str, int] = {}

    def _call_index(self, payload: dict) -> int:
        key = hashlib.sha256(
            json.dumps({"model": payload["model"], "messages": payload["messages"]},
                       sort_keys=True).encode()
        ).hexdigest()
        index = self._calls.get(key, 0)
        self._calls[key] = index + 1
        return index

    def _generation_reply(self, payload: dict) -> str:
        system = payload["messages"][0]["content"]
        index = self._call_index(payload)
        if "exactly 1 course of action" in system:
            coa = self.variants[index % len(self.variants)]
            return _wrap(coa_to_canonical_json(coa), "Here is the requested course of action:")
        n = 3 if "exactly 3 " in system else 1
        chosen = [
            replace(self.variants[i % len(self.variants)], coa_id=f"coa_id_{i}") for i in range(n)
        ]
        return _wrap(coas_to_canonical_json(chosen), "Here are the requested courses of action:")

    def _prior_coa(self, payload: dict):
        for message in reversed(payload["messages"]):
            if message["role"] == "assistant":
                coas = parse_coa_document(_message_text(message), scenario=self.scenario)
                return coas[0]
        raise RuntimeError("refinement request carries no assistant turn")

    def handle(self, request: httpx.Request) -> httpx.Response:
        payload = json.loads(request.content)
        last_text = _message_text(payload["messages"][-1])
        if last_text == FEEDBACK_H1:
            refined = apply_aviation_refinement(self._prior_coa(payload), self.scenario)
            text = _wrap(coa_to_canonical_json(refined), "Understood; aviation retasked:")
        elif last_text == FEEDBACK_H2:
            prior = self._prior_coa(payload)
            coa = h2_style_coa(self.scenario, coa_id=prior.coa_id)
            text = _wrap(coa_to_canonical_json(coa), "Understood; forces regrouped as ordered:")
        else:
            text = self._generation_reply(payload)
        return httpx.Response(
            200,
            json={
                "choices": [{"message": {"role": "assistant", "content": text}}],
                "usage": {"prompt_tokens": 0, "completion_tokens": 0, "total_tokens": 0},
            },
        )


def _recording_orchestrator(store: Path) -> Orchestrator:
    transport = httpx.MockTransport(ScriptedResponder().handle)
    return Orchestrator(store, Gateway(transport=transport))


def record_session_demo(path: Path, store: Path) -> None:
    spec = ModelSpec(backend="live", model_id=TEXT_MODEL, record_path=str(path))
    orch = _recording_orchestrator(store / "session_demo")
    scenario = tigerclaw_default()
    session = orch.create_session(default_mission(scenario), spec)
    coas = orch.generate_coas(session.session_id, n=3)
    refined = orch.submit_feedback(session.session_id, coas[0].coa_id, FEEDBACK_H1)
    refined = orch.submit_feedback(session.session_id, refined.coa_id, FEEDBACK_H2)
    orch.approve(session.session_id, refined.coa_id)
    print(f"  {path.name}: 3-COA generation plus two refinement rounds")


def record_eval(path: Path, store: Path, variant: str) -> None:
    spec = ModelSpec(backend="live", model_id=TEXT_MODEL, record_path=str(path))
    orch = _recording_orchestrator(store / f"eval_{variant}")
    scenario = tigerclaw_default()
    # sims_per_coa=1 keeps recording fast; rollouts never touch the fixtures
    orch.run_evaluation_protocol(
        default_mission(scenario), spec, variant, coas_per_variant=5, sims_per_coa=1
    )
    print(f"  {path.name}: five single-COA sessions for variant {variant}")


def verify_replay(path: Path, store: Path, variant: str) -> None:
    spec = ModelSpec(backend="replay", model_id=TEXT_MODEL, fixture_path=str(path))
    orch = Orchestrator(store / f"verify_{variant}", Gateway())
    report = orch.run_evaluation_protocol(
        default_mission(tigerclaw_default()), spec, variant, coas_per_variant=5, sims_per_coa=1
    )
    assert report.pooled[0].n == 5, report.pooled[0]
    print(f"  replay check {path.name}: ok (n={report.pooled[0].n})")


def main() -> None:
    os.environ.setdefault(ENV_API_KEY, "fixture-recording-key")
    FIXTURES.mkdir(exist_ok=True)
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        store = Path(tmp)
        targets = {
            "session_demo.jsonl": lambda p: record_session_demo(p, store),
            "eval_coa_gpt.jsonl": lambda p: record_eval(p, store, "COA-GPT"),
            "eval_h1.jsonl": lambda p: record_eval(p, store, "COA-GPT+H1"),
            "eval_h2.jsonl": lambda p: record_eval(p, store, "COA-GPT+H2"),
        }
        print("recording fixtures:")
        for name, recorder in targets.items():
            path = FIXTURES / name
            path.unlink(missing_ok=True)
            recorder(path)
        print("verifying replay closure:")
        for name, variant in [
            ("eval_coa_gpt.jsonl", "COA-GPT"),
            ("eval_h1.jsonl", "COA-GPT+H1"),
            ("eval_h2.jsonl", "COA-GPT+H2"),
        ]:
            verify_replay(FIXTURES / name, store, variant)
    print("done")


if __name__ == "__main__":
    sys.exit(main())
