"""Prompt assembly: system template, mission brief, and refinement turns."""

from __future__ import annotations

import random

import pytest

from coa_forge.coa import coa_to_canonical_json
from coa_forge.errors import EmptyFeedback, InvariantViolation
from coa_forge.prompts import (
    DoctrineExcerpts,
    Message,
    PromptBundle,
    build_generation_prompt,
    build_refinement_turns,
    build_system_prompt,
    bundle_from_dict,
    bundle_to_dict,
    default_example_coa,
    generation_prompt_for,
    initial_bundle,
)
from coa_forge.session import FEEDBACK_H1

from conftest import random_valid_coa


# -- system prompt ---------------------------------------------------------------

def test_system_prompt_carries_the_command_list():
    text = build_system_prompt()
    assert "You are a military commander assistant" in text
    assert "attack_move_unit(unit_id, target_x, target_y)" in text
    assert "engage_target_unit(unit_id, target_unit_id, target_x, target_y)" in text


def test_system_prompt_carries_the_completeness_rule():
    assert "all friendly units are given commands" in build_system_prompt()


def test_system_prompt_substitutes_all_placeholders():
    text = build_system_prompt()
    assert "{example_coa_statement}" not in text
    assert "{additional_military_info}" not in text
    assert '"coa_id_0"' in text  # the worked example made it in
    assert "envelopment, flank attack, frontal attack" in text  # and the doctrine


def test_system_prompt_requests_coa_count():
    assert "exactly 3 distinct courses of action" in build_system_prompt()
    assert "exactly 5 distinct courses of action" in build_system_prompt(n_coas=5)
    assert "exactly 1 course of action" in build_system_prompt(n_coas=1)
    with pytest.raises(InvariantViolation):
        build_system_prompt(n_coas=0)


def test_system_prompt_accepts_custom_sections():
    text = build_system_prompt(example_coa='{"coa_id_0": {"name": "Custom"}}', doctrine="")
    assert '"Custom"' in text
    assert "{additional_military_info}" not in text


def test_default_example_keeps_both_command_forms():
    example = default_example_coa()
    assert "move_unit(4295229441, 35.0, 41.0)" in example
    assert "engage_target_unit(4295229441, 3355229433)" in example


def test_doctrine_default_has_three_lines():
    doctrine = DoctrineExcerpts.default()
    rendered = doctrine.render()
    assert "turning movement" in doctrine.maneuver_forms
    assert len([line for line in rendered.splitlines() if line.strip()]) == 3


# -- mission prompt ----------------------------------------------------------------

def test_generation_prompt_structure():
    text = build_generation_prompt("Take the hill.", "Open fields.", "[]")
    assert text.startswith(
        "I need to generate a single military course of action to accomplish"
    )
    assert "Take the hill." in text
    assert "Open fields." in text
    assert "{MISSION_OBJECTIVE_TIGERCLAW}" not in text
    assert "{TERRAIN_TIGERCLAW}" not in text
    assert "{raw_units_json}" not in text


def test_generation_prompt_for_scenario(tigerclaw):
    text = generation_prompt_for(tigerclaw)
    assert "seize objective OBJ Lion East" in text
    for bridge in ("Bobcat", "Wolf", "Bear", "Lion"):
        assert bridge in text
    assert '"unit_id": 4295229441' in text
    assert '"alliance": "Friendly"' in text


def test_prompts_are_deterministic(tigerclaw):
    assert build_system_prompt() == build_system_prompt()
    assert generation_prompt_for(tigerclaw) == generation_prompt_for(tigerclaw)


# -- bundle shape ---------------------------------------------------------------------

def test_bundle_requires_system_text():
    with pytest.raises(InvariantViolation):
        PromptBundle(system="", turns=(Message("user", "hi"),))


def test_bundle_requires_alternation_starting_with_user():
    with pytest.raises(InvariantViolation):
        PromptBundle(system="s", turns=(Message("assistant", "hello"),))
    with pytest.raises(InvariantViolation):
        PromptBundle(system="s", turns=(Message("user", "a"), Message("user", "b")))
    PromptBundle(system="s", turns=(Message("user", "a"), Message("assistant", "b")))


def test_message_role_guard():
    with pytest.raises(InvariantViolation):
        Message("system", "nope")


def test_initial_bundle(tigerclaw):
    bundle = initial_bundle(tigerclaw, n_coas=3)
    assert len(bundle.turns) == 1
    assert bundle.turns[0].role == "user"
    assert "seize objective OBJ Lion East" in bundle.turns[0].text
    assert "exactly 3 distinct courses of action" in bundle.system


def test_initial_bundle_attaches_image(tigerclaw):
    png = b"\x89PNG fake bytes"
    bundle = initial_bundle(tigerclaw, image_png=png)
    assert bundle.turns[0].image_png == png


# -- refinement turns --------------------------------------------------------------------

def test_refinement_appends_exactly_two_turns(tigerclaw):
    coa = random_valid_coa(tigerclaw, random.Random(1))
    bundle = initial_bundle(tigerclaw)
    refined = build_refinement_turns(bundle, coa, FEEDBACK_H1)
    assert len(refined.turns) == len(bundle.turns) + 2
    assert refined.system == bundle.system
    assert refined.turns[: len(bundle.turns)] == bundle.turns


def test_refinement_injects_chosen_coa_as_the_assistant_turn(tigerclaw):
    coa = random_valid_coa(tigerclaw, random.Random(2))
    refined = build_refinement_turns(initial_bundle(tigerclaw), coa, "Shift the axis south.")
    assistant, user = refined.turns[-2], refined.turns[-1]
    assert assistant.role == "assistant"
    assert assistant.text == coa_to_canonical_json(coa)
    assert user.role == "user"
    assert user.text == "Shift the axis south."


def test_refinement_keeps_feedback_verbatim(tigerclaw):
    coa = random_valid_coa(tigerclaw, random.Random(3))
    refined = build_refinement_turns(initial_bundle(tigerclaw), coa, FEEDBACK_H1)
    assert refined.turns[-1].text == FEEDBACK_H1


def test_refinement_rejects_blank_feedback(tigerclaw):
    coa = random_valid_coa(tigerclaw, random.Random(4))
    for blank in ("", "   ", "\n"):
        with pytest.raises(EmptyFeedback):
            build_refinement_turns(initial_bundle(tigerclaw), coa, blank)


def test_refinement_is_stackable(tigerclaw):
    rng = random.Random(5)
    bundle = initial_bundle(tigerclaw)
    for i in range(3):
        bundle = build_refinement_turns(bundle, random_valid_coa(tigerclaw, rng), f"round {i}")
    assert len(bundle.turns) == 7
    roles = [m.role for m in bundle.turns]
    assert roles == ["user", "assistant", "user", "assistant", "user", "assistant", "user"]


def test_last_assistant_text(tigerclaw):
    coa = random_valid_coa(tigerclaw, random.Random(6))
    bundle = initial_bundle(tigerclaw)
    assert bundle.last_assistant_text is None
    refined = build_refinement_turns(bundle, coa, "push north")
    assert refined.last_assistant_text == coa_to_canonical_json(coa)


# -- serialization ------------------------------------------------------------------------

def test_bundle_dict_round_trip(tigerclaw):
    coa = random_valid_coa(tigerclaw, random.Random(7))
    bundle = build_refinement_turns(
        initial_bundle(tigerclaw, image_png=b"\x89PNG io"), coa, "tighten the left flank"
    )
    again = bundle_from_dict(bundle_to_dict(bundle))
    assert again == bundle
    assert again.turns[0].image_png == b"\x89PNG io"
