"""Shared fixtures and randomized-input helpers for the test suite."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from coa_forge.coa import AttackMove, CourseOfAction, EngageTarget, TaskAllocation
from coa_forge.gateway import TEXT_MODEL, ModelSpec
from coa_forge.scenario import (
    Alliance,
    Bridge,
    Objective,
    Point,
    Rect,
    RiverBand,
    Scenario,
    Terrain,
    Unit,
    UnitType,
    tigerclaw_default,
)

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES_DIR = REPO_ROOT / "fixtures"
DATA_DIR = Path(__file__).resolve().parent / "data"


@pytest.fixture(scope="session")
def tigerclaw() -> Scenario:
    return tigerclaw_default()


def replay_spec(fixture_name: str, **overrides) -> ModelSpec:
    """A gateway spec that answers from a recorded fixture file."""
    kwargs = dict(
        backend="replay",
        model_id=TEXT_MODEL,
        fixture_path=str(FIXTURES_DIR / fixture_name),
    )
    kwargs.update(overrides)
    return ModelSpec(**kwargs)


def random_valid_coa(
    scenario: Scenario, rng: random.Random, coa_id: str = "coa_id_0"
) -> CourseOfAction:
    """One command per friendly unit, commands and coordinates randomized.

    Produces only shapes the validator accepts, so round-trip tests can
    assert identity without filtering.
    """
    hostiles = scenario.hostile_units()
    allocations = []
    for unit in scenario.friendly_units():
        roll = rng.random()
        if roll < 0.45 or not hostiles:
            target = Point(
                round(rng.uniform(0.0, scenario.terrain.width), 3),
                round(rng.uniform(0.0, scenario.terrain.height), 3),
            )
            command = AttackMove(unit_id=unit.unit_id, target=target)
        elif roll < 0.8:
            hostile = rng.choice(hostiles)
            command = EngageTarget(
                unit_id=unit.unit_id,
                target_unit_id=hostile.unit_id,
                target=hostile.position,
            )
        else:
            # Target position deliberately left unresolved (2-argument form).
            hostile = rng.choice(hostiles)
            command = EngageTarget(unit_id=unit.unit_id, target_unit_id=hostile.unit_id)
        allocations.append(
            TaskAllocation(
                unit_id=unit.unit_id,
                unit_type=unit.unit_type,
                alliance=unit.alliance,
                position=unit.position,
                command=command,
            )
        )
    return CourseOfAction(
        coa_id=coa_id,
        name=f"Option {rng.randrange(10_000)}",
        overview="Cross the river, destroy resistance in zone, and secure the objective.",
        task_allocation=allocations,
    )


def mini_scenario(
    units: list[Unit],
    *,
    width: float = 256.0,
    height: float = 256.0,
    river_x: tuple[float, float] = (200.0, 206.0),
    bridge_exit: Point | None = None,
    objective: Point | None = None,
    objective_radius: float = 6.0,
) -> Scenario:
    """A small synthetic battlespace for hand-derived oracles.

    The river sits far east by default so close-quarters duels never touch it.
    """
    exit_point = bridge_exit if bridge_exit is not None else Point(river_x[1] + 2.0, 100.0)
    corridor = Rect(
        x_min=river_x[0] - 2.0,
        y_min=exit_point.y - 3.0,
        x_max=river_x[1] + 2.0,
        y_max=exit_point.y + 3.0,
    )
    terrain = Terrain(
        width=width,
        height=height,
        river=RiverBand(x_min=river_x[0], x_max=river_x[1]),
        bridges=(Bridge(name="Span", exit=exit_point, corridor=corridor),),
        objective=Objective(
            center=objective if objective is not None else Point(width - 16.0, height - 16.0),
            radius=objective_radius,
        ),
    )
    return Scenario(
        terrain=terrain,
        units=tuple(units),
        mission_objective_text="Destroy all enemy forces in zone.",
        terrain_text="Open terrain crossed by one river span far to the east.",
    )


def make_unit(
    unit_id: int,
    unit_type: UnitType,
    alliance: Alliance,
    x: float,
    y: float,
    health: float = 100.0,
    post: Point | None = None,
) -> Unit:
    return Unit(
        unit_id=unit_id,
        unit_type=unit_type,
        alliance=alliance,
        position=Point(x, y),
        health=health,
        post=post,
    )
