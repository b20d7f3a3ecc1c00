"""HTTP service exposing the session pipeline under /v1.

Every endpoint is a thin adapter over Orchestrator operations; the HTTP layer
adds serialization and an error-to-status mapping, nothing else. Guard and
validation errors map to 4xx, transport and internal failures to 5xx.
"""
from __future__ import annotations

import base64
import json
import os
from pathlib import Path

from fastapi import FastAPI, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from .coa import CourseOfAction, coa_to_canonical_json
from .errors import CoaForgeError, InvalidCoa, InvalidMission, UnknownCoa, UnparseableAfterRepairs
from .gateway import Gateway, spec_from_dict, spec_to_dict
from .metrics import report_to_dict
from .render import render_coa_overlay, render_cop
from .scenario import Scenario, load_scenario, scenario_to_document, tigerclaw_default
from .session import MissionSpec, Orchestrator, Session
from .simulation import config_from_scenario

DEFAULT_STORE = "./coa_forge_store"

_STATUS: dict[str, int] = {
    # guard and validation failures: the request itself is bad
    "MalformedDocument": 400,
    "InvariantViolation": 400,
    "CommandParseError": 400,
    "UnknownVerb": 400,
    "ArityMismatch": 400,
    "MalformedArgument": 400,
    "NoJsonFound": 400,
    "SchemaError": 400,
    "InvalidCoa": 400,
    "InvalidMission": 400,
    "EmptyFeedback": 400,
    "ImageUnsupported": 400,
    "UnsupportedFormat": 400,
    "EmptyInput": 400,
    # lookup misses
    "SessionNotFound": 404,
    # valid request, wrong session state
    "UnknownCoa": 409,
    "StateError": 409,
    # upstream and internal failures
    "TransportError": 503,
    "UnparseableAfterRepairs": 502,
    "AuthError": 500,
    "FixtureMiss": 500,
}


def _error_response(e: CoaForgeError) -> JSONResponse:
    status = _STATUS.get(e.code, 500)
    detail = None
    if isinstance(e, InvalidCoa):
        detail = [
            {"code": v.code, "message": v.message, "unit_id": v.unit_id} for v in e.violations
        ]
    elif isinstance(e, UnparseableAfterRepairs):
        detail = list(e.attempts)
    return JSONResponse(
        status_code=status,
        content={"error": {"code": e.code, "message": str(e), "detail": detail}},
    )


# -- request bodies -------------------------------------------------------------------

class ModelSpecBody(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    backend: str
    model_id: str
    temperature: float = 0.7
    max_output_tokens: int = 4096
    supports_images: bool = False
    fixture_path: str | None = None
    record_path: str | None = None


class MissionBody(BaseModel):
    scenario: str | dict = "tigerclaw"
    objective_text: str | None = None
    terrain_text: str | None = None
    cop_image_b64: str | None = None


class CreateSessionBody(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model: ModelSpecBody
    mission: MissionBody = Field(default_factory=MissionBody)


class GenerateBody(BaseModel):
    n: int = 3


class FeedbackBody(BaseModel):
    coa_id: str
    text: str


class ApproveBody(BaseModel):
    coa_id: str


class AnalyzeBody(BaseModel):
    sims_per_coa: int = 10
    base_seed: int = 42


# -- views ----------------------------------------------------------------------------

def coa_view(coa: CourseOfAction) -> dict:
    body = json.loads(coa_to_canonical_json(coa))[coa.coa_id]
    return {"coa_id": coa.coa_id, **body, "warnings": list(coa.warnings)}


def session_view(session: Session) -> dict:
    return {
        "session_id": session.session_id,
        "status": session.status.value,
        "mission": {
            "objective_text": session.mission.objective_text,
            "terrain_text": session.mission.terrain_text,
            "has_image": session.mission.cop_image is not None,
        },
        "model": spec_to_dict(session.model),
        "history": [
            {"feedback": entry.feedback, "coas": [coa_view(c) for c in entry.coas]}
            for entry in session.history
        ],
        "approved_coa_id": session.approved_coa.coa_id if session.approved_coa else None,
        "report": report_to_dict(session.report) if session.report else None,
    }


def _resolve_scenario(ref: str | dict) -> Scenario:
    if isinstance(ref, dict):
        return load_scenario(ref)
    if ref == "tigerclaw":
        return tigerclaw_default()
    raise InvalidMission(
        f"unknown scenario reference {ref!r}; pass 'tigerclaw' or an inline scenario document"
    )


def _mission_from_body(body: MissionBody) -> MissionSpec:
    scenario = _resolve_scenario(body.scenario)
    image = None
    if body.cop_image_b64:
        try:
            image = base64.b64decode(body.cop_image_b64, validate=True)
        except Exception:
            raise InvalidMission("cop_image_b64 is not valid base64")
    return MissionSpec(
        objective_text=body.objective_text or scenario.mission_objective_text,
        terrain_text=body.terrain_text or scenario.terrain_text,
        scenario=scenario,
        cop_image=image,
    )


# -- app ------------------------------------------------------------------------------

def create_app(
    store_dir: str | Path | None = None,
    gateway: Gateway | None = None,
    cors_origins: list[str] | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    store = Path(store_dir or os.environ.get("COA_FORGE_STORE", DEFAULT_STORE))
    orch = Orchestrator(store, gateway=gateway)
    app = FastAPI(title="coa-forge", version="0.1.0")
    app.state.orchestrator = orch
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(CoaForgeError)
    async def _handle_domain_error(request, exc: CoaForgeError):
        return _error_response(exc)

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        mission = _mission_from_body(body.mission)
        model = spec_from_dict(body.model.model_dump())
        session = orch.create_session(mission, model)
        return session_view(session)

    @app.get("/v1/sessions")
    def list_sessions() -> dict:
        return {"sessions": orch.list_session_ids()}

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return session_view(orch.get_session(session_id))

    @app.post("/v1/sessions/{session_id}/coas")
    def generate(session_id: str, body: GenerateBody) -> dict:
        coas = orch.generate_coas(session_id, n=body.n)
        return {"session_id": session_id, "coas": [coa_view(c) for c in coas]}

    @app.post("/v1/sessions/{session_id}/feedback")
    def feedback(session_id: str, body: FeedbackBody) -> dict:
        refined = orch.submit_feedback(session_id, body.coa_id, body.text)
        return {"session_id": session_id, "coa": coa_view(refined)}

    @app.post("/v1/sessions/{session_id}/approve")
    def approve(session_id: str, body: ApproveBody) -> dict:
        return session_view(orch.approve(session_id, body.coa_id))

    @app.post("/v1/sessions/{session_id}/analyze")
    def analyze(session_id: str, body: AnalyzeBody) -> dict:
        report = orch.analyze(session_id, sims_per_coa=body.sims_per_coa, base_seed=body.base_seed)
        return report_to_dict(report)

    @app.get("/v1/sessions/{session_id}/coas/{coa_id}/overlay.svg")
    def overlay(session_id: str, coa_id: str) -> Response:
        session = orch.get_session(session_id)
        for entry in reversed(session.history):
            for coa in entry.coas:
                if coa.coa_id == coa_id:
                    svg = render_coa_overlay(session.mission.scenario, coa)
                    return Response(content=svg, media_type="image/svg+xml")
        raise UnknownCoa(f"coa_id {coa_id!r} does not appear in session {session_id}")

    @app.get("/v1/sessions/{session_id}/cop.png")
    def cop(session_id: str) -> Response:
        session = orch.get_session(session_id)
        return Response(content=render_cop(session.mission.scenario), media_type="image/png")

    @app.get("/v1/scenarios/tigerclaw")
    def scenario_doc() -> dict:
        scenario = tigerclaw_default()
        doc = scenario_to_document(scenario)
        doc["sim_config_digest"] = config_from_scenario(scenario).digest()
        return doc

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
