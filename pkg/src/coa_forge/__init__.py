"""coa-forge: LLM-assisted course-of-action drafting, refinement, and analysis.

The pipeline: load a scenario, prompt a chat model for candidate COAs,
iterate on them with commander feedback, then score the approved COA in a
deterministic tick simulator and report aggregate metrics.
"""
from .coa import (
    AttackMove,
    CourseOfAction,
    EngageTarget,
    TaskAllocation,
    parse_coa_document,
    parse_command,
    validate_coa,
)
from .errors import CoaForgeError
from .gateway import Gateway, ModelSpec, complete_and_parse
from .metrics import EvalReport, aggregate, compare, export, load_baselines
from .prompts import PromptBundle, build_generation_prompt, build_system_prompt
from .render import render_coa_overlay, render_cop
from .scenario import Alliance, Scenario, Unit, UnitType, load_scenario, tigerclaw_default
from .session import MissionSpec, Orchestrator, SessionStatus, default_mission
from .simulation import SimConfig, SimOutcome, config_from_scenario, run_rollout, score_outcome

__version__ = "0.1.0"

__all__ = [
    "Alliance",
    "AttackMove",
    "CoaForgeError",
    "CourseOfAction",
    "EngageTarget",
    "EvalReport",
    "Gateway",
    "MissionSpec",
    "ModelSpec",
    "Orchestrator",
    "PromptBundle",
    "Scenario",
    "SessionStatus",
    "SimConfig",
    "SimOutcome",
    "TaskAllocation",
    "Unit",
    "UnitType",
    "aggregate",
    "build_generation_prompt",
    "build_system_prompt",
    "compare",
    "complete_and_parse",
    "config_from_scenario",
    "default_mission",
    "export",
    "load_baselines",
    "load_scenario",
    "parse_coa_document",
    "parse_command",
    "render_coa_overlay",
    "render_cop",
    "run_rollout",
    "score_outcome",
    "tigerclaw_default",
    "validate_coa",
]
