"""Prompt assembly for COA generation and refinement.

Templates live as text assets under data/prompts/ so the exact wording sent to
the model is reviewable. Placeholders are literal brace tokens substituted with
str.replace; the templates themselves contain JSON braces, so str.format is a
trap here.

Assembly is pure: same inputs, byte-identical prompts.
"""
from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from importlib import resources

from .coa import CourseOfAction, coa_to_canonical_json
from .errors import EmptyFeedback, InvariantViolation
from .scenario import Scenario, units_to_wire


def _asset(name: str) -> str:
    return resources.files("coa_forge.data").joinpath(f"prompts/{name}").read_text("utf-8")


def default_example_coa() -> str:
    """The aggregated-JSON response template shown to the model."""
    return _asset("example_coa.json")


@dataclass(frozen=True)
class DoctrineExcerpts:
    maneuver_forms: str
    offensive_tasks: str
    defensive_tasks: str

    @classmethod
    def default(cls) -> DoctrineExcerpts:
        lines = [ln for ln in _asset("doctrine.txt").splitlines() if ln.strip()]
        if len(lines) != 3:
            raise InvariantViolation("doctrine asset must hold exactly three excerpt lines")
        return cls(maneuver_forms=lines[0], offensive_tasks=lines[1], defensive_tasks=lines[2])

    def render(self) -> str:
        return "\n".join(part for part in (self.maneuver_forms, self.offensive_tasks, self.defensive_tasks) if part)


@dataclass(frozen=True)
class Message:
    """One conversational turn. image_png rides along for vision models."""

    role: str
    text: str
    image_png: bytes | None = None

    def __post_init__(self) -> None:
        if self.role not in ("user", "assistant"):
            raise InvariantViolation(f"message role must be user or assistant, got {self.role!r}")


@dataclass(frozen=True)
class PromptBundle:
    system: str
    turns: tuple[Message, ...]

    def __post_init__(self) -> None:
        if not self.system.strip():
            raise InvariantViolation("system prompt must be non-empty")
        for i, turn in enumerate(self.turns):
            expected = "user" if i % 2 == 0 else "assistant"
            if turn.role != expected:
                raise InvariantViolation(
                    f"turn {i} must have role {expected!r} (turns alternate, user first), got {turn.role!r}"
                )

    def with_turns(self, *messages: Message) -> PromptBundle:
        return PromptBundle(system=self.system, turns=self.turns + tuple(messages))

    @property
    def last_assistant_text(self) -> str | None:
        for turn in reversed(self.turns):
            if turn.role == "assistant":
                return turn.text
        return None


def build_system_prompt(
    example_coa: str | None = None,
    doctrine: DoctrineExcerpts | str | None = None,
    n_coas: int = 3,
) -> str:
    """Fill the system template and state how many COAs the commander wants."""
    if n_coas < 1:
        raise InvariantViolation(f"n_coas must be at least 1, got {n_coas}")
    if example_coa is None:
        example_coa = default_example_coa()
    if doctrine is None:
        doctrine = DoctrineExcerpts.default()
    info = doctrine.render() if isinstance(doctrine, DoctrineExcerpts) else doctrine
    text = _asset("system.txt")
    text = text.replace("{example_coa_statement}", example_coa.rstrip("\n"))
    text = text.replace("{additional_military_info}", info.rstrip("\n"))
    noun = "course of action" if n_coas == 1 else "distinct courses of action"
    return text + f"\nFor this mission the commander requires exactly {n_coas} {noun} in the single JSON object.\n"


def build_generation_prompt(mission_objective: str, terrain: str, forces_wire: str) -> str:
    text = _asset("generate.txt")
    text = text.replace("{MISSION_OBJECTIVE_TIGERCLAW}", mission_objective)
    text = text.replace("{TERRAIN_TIGERCLAW}", terrain)
    text = text.replace("{raw_units_json}", forces_wire)
    return text


def generation_prompt_for(scenario: Scenario) -> str:
    wire = json.dumps(units_to_wire(list(scenario.units)), indent=2)
    return build_generation_prompt(scenario.mission_objective_text, scenario.terrain_text, wire)


def initial_bundle(
    scenario: Scenario,
    n_coas: int = 3,
    example_coa: str | None = None,
    doctrine: DoctrineExcerpts | str | None = None,
    image_png: bytes | None = None,
) -> PromptBundle:
    """System prompt plus the opening generation request (image optional)."""
    return PromptBundle(
        system=build_system_prompt(example_coa=example_coa, doctrine=doctrine, n_coas=n_coas),
        turns=(Message(role="user", text=generation_prompt_for(scenario), image_png=image_png),),
    )


def build_refinement_turns(
    history: PromptBundle, chosen_coa: CourseOfAction, feedback: str
) -> PromptBundle:
    """Append the chosen COA as the assistant's turn and the commander's
    feedback, verbatim, as the next user turn. History length grows by 2."""
    if not feedback.strip():
        raise EmptyFeedback("feedback must be a non-empty string")
    return history.with_turns(
        Message(role="assistant", text=coa_to_canonical_json(chosen_coa)),
        Message(role="user", text=feedback),
    )


# -- persistence --------------------------------------------------------------------

def bundle_to_dict(bundle: PromptBundle) -> dict:
    return {
        "system": bundle.system,
        "turns": [
            {
                "role": m.role,
                "text": m.text,
                "image_png_b64": base64.b64encode(m.image_png).decode("ascii") if m.image_png else None,
            }
            for m in bundle.turns
        ],
    }


def bundle_from_dict(doc: dict) -> PromptBundle:
    turns = tuple(
        Message(
            role=t["role"],
            text=t["text"],
            image_png=base64.b64decode(t["image_png_b64"]) if t.get("image_png_b64") else None,
        )
        for t in doc["turns"]
    )
    return PromptBundle(system=doc["system"], turns=turns)
