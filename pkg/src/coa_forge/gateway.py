"""Chat-completion client with live and record/replay backends.

The live backend speaks the OpenAI-compatible chat-completions protocol over
HTTP. The replay backend serves recorded responses from a JSONL fixture keyed
by a request digest, so tests and offline runs are fully deterministic.

Requests are matched to fixtures by sha256 over (model_id, message texts,
image content hashes). Temperature is deliberately excluded from the digest:
fixtures survive sampling-config edits. Identical requests replay in recorded
order (one queue per digest), which is what lets five byte-identical
generation calls return five different COA sets.

Credentials never enter fixtures or logs; only the request snapshot above and
the response are recorded.
"""
from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import httpx

from .coa import CourseOfAction, parse_coa_document, validate_coa
from .errors import (
    AuthError,
    CoaForgeError,
    FixtureMiss,
    ImageUnsupported,
    InvariantViolation,
    TransportError,
    UnparseableAfterRepairs,
)
from .prompts import Message, PromptBundle
from .scenario import Scenario

TEXT_MODEL = "gpt-4-1106-preview"
VISION_MODEL = "gpt-4-vision-preview"

ENV_API_KEY = "COA_FORGE_API_KEY"
ENV_API_BASE = "COA_FORGE_API_BASE"
DEFAULT_API_BASE = "https://api.openai.com/v1"

_RETRY_ATTEMPTS = 3
_BACKOFF_START_S = 1.0


@dataclass(frozen=True)
class ModelSpec:
    backend: str                       # "live" or "replay"
    model_id: str
    temperature: float = 0.7
    max_output_tokens: int = 4096
    supports_images: bool = False
    fixture_path: str | None = None    # replay source
    record_path: str | None = None     # live runs append fixtures here

    def __post_init__(self) -> None:
        if self.backend not in ("live", "replay"):
            raise InvariantViolation(f"backend must be live or replay, got {self.backend!r}")
        if self.backend == "replay" and not self.fixture_path:
            raise InvariantViolation("replay backend requires a fixture path")
        if not self.model_id:
            raise InvariantViolation("model_id must be non-empty")


def spec_to_dict(spec: ModelSpec) -> dict:
    return {
        "backend": spec.backend,
        "model_id": spec.model_id,
        "temperature": spec.temperature,
        "max_output_tokens": spec.max_output_tokens,
        "supports_images": spec.supports_images,
        "fixture_path": spec.fixture_path,
        "record_path": spec.record_path,
    }


def spec_from_dict(doc: dict) -> ModelSpec:
    return ModelSpec(
        backend=doc["backend"],
        model_id=doc["model_id"],
        temperature=doc.get("temperature", 0.7),
        max_output_tokens=doc.get("max_output_tokens", 4096),
        supports_images=doc.get("supports_images", False),
        fixture_path=doc.get("fixture_path"),
        record_path=doc.get("record_path"),
    )


@dataclass(frozen=True)
class LlmExchange:
    digest: str
    model_id: str
    temperature: float
    request: dict            # system + turns with image hashes, never raw bytes or keys
    response_text: str
    latency_s: float
    token_usage: dict
    timestamp: str

    def __post_init__(self) -> None:
        if not self.response_text:
            raise InvariantViolation("a successful exchange must carry a non-empty response")


def exchange_to_dict(ex: LlmExchange) -> dict:
    return {
        "digest": ex.digest,
        "model_id": ex.model_id,
        "temperature": ex.temperature,
        "request": ex.request,
        "response_text": ex.response_text,
        "latency_s": ex.latency_s,
        "token_usage": ex.token_usage,
        "timestamp": ex.timestamp,
    }


def request_snapshot(bundle: PromptBundle, spec: ModelSpec) -> dict:
    """Audit-safe view of a request: texts and image hashes only."""
    messages = [{"role": "system", "text": bundle.system, "image_sha256": None}]
    for turn in bundle.turns:
        messages.append(
            {
                "role": turn.role,
                "text": turn.text,
                "image_sha256": hashlib.sha256(turn.image_png).hexdigest() if turn.image_png else None,
            }
        )
    return {"model_id": spec.model_id, "messages": messages}


def request_digest(bundle: PromptBundle, spec: ModelSpec) -> str:
    snapshot = request_snapshot(bundle, spec)
    return hashlib.sha256(json.dumps(snapshot, sort_keys=True).encode("utf-8")).hexdigest()


class Gateway:
    """Thread-safe client. `transport` is injected into httpx for tests and
    fixture recording; `sleeper` lets tests skip real backoff waits."""

    def __init__(
        self,
        transport: httpx.BaseTransport | None = None,
        sleeper=time.sleep,
        requests_per_minute: int | None = None,
        timeout_s: float = 60.0,
    ):
        self._transport = transport
        self._sleep = sleeper
        self._rpm = requests_per_minute
        self._timeout_s = timeout_s
        self._recent: deque[float] = deque()
        self._replay_queues: dict[str, dict[str, deque[dict]]] = {}
        self._lock = threading.Lock()

    # -- public entry ----------------------------------------------------------------

    def complete(self, bundle: PromptBundle, spec: ModelSpec) -> LlmExchange:
        if any(t.image_png for t in bundle.turns) and not spec.supports_images:
            raise ImageUnsupported(f"model {spec.model_id} does not accept image attachments")
        if spec.backend == "replay":
            return self._replay(bundle, spec)
        return self._live(bundle, spec)

    # -- replay ----------------------------------------------------------------------

    def _queues_for(self, path: str) -> dict[str, deque[dict]]:
        resolved = str(Path(path).resolve())
        with self._lock:
            if resolved not in self._replay_queues:
                if not Path(resolved).exists():
                    raise FixtureMiss(f"fixture file not found: {path}")
                queues: dict[str, deque[dict]] = {}
                with open(resolved, encoding="utf-8") as fh:
                    for line in fh:
                        if not line.strip():
                            continue
                        entry = json.loads(line)
                        queues.setdefault(entry["digest"], deque()).append(entry)
                self._replay_queues[resolved] = queues
            return self._replay_queues[resolved]

    def _replay(self, bundle: PromptBundle, spec: ModelSpec) -> LlmExchange:
        digest = request_digest(bundle, spec)
        queues = self._queues_for(spec.fixture_path)
        with self._lock:
            queue = queues.get(digest)
            if queue is None:
                raise FixtureMiss(
                    f"no recorded response for request digest {digest[:12]} in {spec.fixture_path}"
                )
            if not queue:
                raise FixtureMiss(
                    f"recorded responses for request digest {digest[:12]} are exhausted "
                    f"in {spec.fixture_path}"
                )
            entry = queue.popleft()
        return LlmExchange(
            digest=digest,
            model_id=spec.model_id,
            temperature=spec.temperature,
            request=request_snapshot(bundle, spec),
            response_text=entry["response_text"],
            latency_s=0.0,
            token_usage=entry.get("token_usage", {}),
            timestamp=datetime.now(timezone.utc).isoformat(),
        )

    # -- live ------------------------------------------------------------------------

    def _rate_limit(self) -> None:
        if self._rpm is None:
            return
        with self._lock:
            now = time.monotonic()
            while self._recent and now - self._recent[0] > 60.0:
                self._recent.popleft()
            wait = 0.0
            if len(self._recent) >= self._rpm:
                wait = 60.0 - (now - self._recent[0])
            self._recent.append(now + max(wait, 0.0))
        if wait > 0:
            self._sleep(wait)

    def _live(self, bundle: PromptBundle, spec: ModelSpec) -> LlmExchange:
        api_key = os.environ.get(ENV_API_KEY, "")
        if not api_key:
            raise AuthError(f"live backend requires {ENV_API_KEY} to be set")
        base = os.environ.get(ENV_API_BASE, DEFAULT_API_BASE).rstrip("/")
        payload = {
            "model": spec.model_id,
            "messages": _wire_messages(bundle),
            "temperature": spec.temperature,
            "max_tokens": spec.max_output_tokens,
        }
        self._rate_limit()
        last_error: Exception | None = None
        for attempt in range(_RETRY_ATTEMPTS):
            if attempt:
                self._sleep(_BACKOFF_START_S * 2 ** (attempt - 1))
            start = time.perf_counter()
            try:
                with httpx.Client(transport=self._transport, timeout=self._timeout_s) as client:
                    resp = client.post(
                        f"{base}/chat/completions",
                        json=payload,
                        headers={"Authorization": f"Bearer {api_key}"},
                    )
            except httpx.TransportError as e:
                last_error = e
                continue
            latency = time.perf_counter() - start
            if resp.status_code in (401, 403):
                raise AuthError(f"backend rejected credentials (HTTP {resp.status_code})")
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = TransportError(f"backend returned HTTP {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise TransportError(f"backend returned HTTP {resp.status_code}: {resp.text[:200]}")
            return self._finish(bundle, spec, resp.json(), latency)
        raise TransportError(
            f"request failed after {_RETRY_ATTEMPTS} attempts: {last_error}"
        )

    def _finish(self, bundle: PromptBundle, spec: ModelSpec, data: dict, latency: float) -> LlmExchange:
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise TransportError("backend response is missing choices[0].message.content")
        if not text:
            raise TransportError("backend returned an empty completion")
        exchange = LlmExchange(
            digest=request_digest(bundle, spec),
            model_id=spec.model_id,
            temperature=spec.temperature,
            request=request_snapshot(bundle, spec),
            response_text=text,
            latency_s=latency,
            token_usage=data.get("usage", {}) or {},
            timestamp=datetime.now(timezone.utc).isoformat(),
        )
        if spec.record_path:
            self._record(spec.record_path, exchange)
        return exchange

    def _record(self, path: str, exchange: LlmExchange) -> None:
        line = json.dumps(exchange_to_dict(exchange))
        with self._lock:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")


def _wire_messages(bundle: PromptBundle) -> list[dict]:
    messages: list[dict] = [{"role": "system", "content": bundle.system}]
    for turn in bundle.turns:
        if turn.image_png is None:
            messages.append({"role": turn.role, "content": turn.text})
        else:
            b64 = base64.b64encode(turn.image_png).decode("ascii")
            messages.append(
                {
                    "role": turn.role,
                    "content": [
                        {"type": "text", "text": turn.text},
                        {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{b64}"}},
                    ],
                }
            )
    return messages


# -- parse-with-repair --------------------------------------------------------------

@dataclass
class RepairOutcome:
    coas: list[CourseOfAction]
    bundle: PromptBundle          # history including the accepted assistant reply
    exchanges: list[LlmExchange]
    attempts: list[str] = field(default_factory=list)


def _attempt_parse(
    text: str, scenario: Scenario | None, expected_count: int | None
) -> tuple[list[CourseOfAction] | None, str | None]:
    try:
        coas = parse_coa_document(text, scenario=scenario)
    except CoaForgeError as e:
        return None, f"{e.code}: {e}"
    problems = []
    if expected_count is not None and len(coas) != expected_count:
        problems.append(f"expected {expected_count} COA(s), found {len(coas)}")
    if scenario is not None:
        for coa in coas:
            report = validate_coa(coa, scenario)
            if not report.valid:
                head = "; ".join(v.message for v in report.violations[:3])
                problems.append(f"COA {coa.coa_id} is invalid: {head}")
    if problems:
        return None, "; ".join(problems)
    return coas, None


def _repair_text(problem: str) -> str:
    return (
        f"Your previous response could not be used: {problem}. "
        "Reply again with one valid JSON object that follows the provided template exactly, "
        "where every friendly unit receives exactly one command."
    )


def complete_and_parse_full(
    gateway: Gateway,
    bundle: PromptBundle,
    spec: ModelSpec,
    scenario: Scenario | None = None,
    max_repair_rounds: int = 2,
    expected_count: int | None = None,
) -> RepairOutcome:
    """complete() then parse and validate, feeding errors back to the model as
    repair turns. Gives up after max_repair_rounds extra attempts."""
    if max_repair_rounds < 0:
        raise InvariantViolation(f"max_repair_rounds must be nonnegative, got {max_repair_rounds}")
    attempts: list[str] = []
    exchanges: list[LlmExchange] = []
    current = bundle
    for round_no in range(max_repair_rounds + 1):
        exchange = gateway.complete(current, spec)
        exchanges.append(exchange)
        current = current.with_turns(Message(role="assistant", text=exchange.response_text))
        coas, problem = _attempt_parse(exchange.response_text, scenario, expected_count)
        if problem is None:
            return RepairOutcome(coas=coas, bundle=current, exchanges=exchanges, attempts=attempts)
        attempts.append(f"attempt {round_no + 1}: {problem}")
        if round_no < max_repair_rounds:
            current = current.with_turns(Message(role="user", text=_repair_text(problem)))
    raise UnparseableAfterRepairs(
        f"no usable COA set after {max_repair_rounds + 1} attempt(s)", attempts=attempts
    )


def complete_and_parse(
    gateway: Gateway,
    bundle: PromptBundle,
    spec: ModelSpec,
    scenario: Scenario | None = None,
    max_repair_rounds: int = 2,
    expected_count: int | None = None,
) -> list[CourseOfAction]:
    return complete_and_parse_full(
        gateway, bundle, spec, scenario, max_repair_rounds, expected_count
    ).coas
