"""Hand-authored COA builders for the bundled scenario.

These are deterministic functions of a scenario, used by the offline demo
fixtures, the CLI examples, and the regression tests. They are written for
the canonical order of battle but degrade gracefully on variants.
"""

from __future__ import annotations

from .coa import AttackMove, CourseOfAction, EngageTarget, TaskAllocation
from .scenario import Alliance, Point, Scenario, Unit, UnitType


def _allocate(unit: Unit, command) -> TaskAllocation:
    return TaskAllocation(unit.unit_id, unit.unit_type, unit.alliance, unit.position, command)


def _hostile_aviation(scenario: Scenario) -> Unit | None:
    for u in scenario.hostile_units():
        if u.unit_type is UnitType.AVIATION:
            return u
    return None


def _hostile_artillery(scenario: Scenario) -> list[Unit]:
    guns = [u for u in scenario.hostile_units() if u.unit_type is UnitType.ARTILLERY]
    return sorted(guns, key=lambda u: u.position.y)


def naive_sweep_coa(scenario: Scenario, coa_id: str = "coa_naive") -> CourseOfAction:
    """Every friendly unit attack-moves straight onto the objective."""
    objective = scenario.terrain.objective.center
    allocations = [
        _allocate(u, AttackMove(u.unit_id, objective)) for u in scenario.friendly_units()
    ]
    return CourseOfAction(
        coa_id,
        "Objective Rush",
        "All forces advance east over the bridges and converge directly on the "
        "objective, engaging whatever stands in the way.",
        allocations,
    )


def h2_style_coa(scenario: Scenario, coa_id: str = "coa_h2") -> CourseOfAction:
    """Scout controls the first bridge, aviation hunts aviation, the rest
    split into two groups against the two hostile artillery positions."""
    objective = scenario.terrain.objective.center
    first_bridge = scenario.terrain.bridges[0].exit if scenario.terrain.bridges else objective
    enemy_air = _hostile_aviation(scenario)
    guns = _hostile_artillery(scenario)

    ground: list[Unit] = []
    allocations: list[TaskAllocation] = []
    for u in scenario.friendly_units():
        if u.unit_type is UnitType.RECONNAISSANCE:
            allocations.append(_allocate(u, AttackMove(u.unit_id, first_bridge)))
        elif u.unit_type is UnitType.AVIATION:
            if enemy_air is not None:
                cmd = EngageTarget(u.unit_id, enemy_air.unit_id, enemy_air.position)
            else:
                cmd = AttackMove(u.unit_id, objective)
            allocations.append(_allocate(u, cmd))
        else:
            ground.append(u)

    ground.sort(key=lambda u: (u.position.y, u.unit_id))
    split = (len(ground) + 1) // 2
    north_goal = guns[0].position if guns else objective
    south_goal = guns[-1].position if guns else objective
    for i, u in enumerate(ground):
        goal = north_goal if i < split else south_goal
        allocations.append(_allocate(u, AttackMove(u.unit_id, goal)))

    allocations.sort(key=lambda a: a.unit_id)
    return CourseOfAction(
        coa_id,
        "Split Axis Assault",
        "The scout element seizes and holds the northern bridge while both "
        "aviation units directly engage the hostile aviation. The remaining "
        "maneuver force splits into two groups that advance on the two hostile "
        "artillery positions, clearing the bridge defenses on the way.",
        allocations,
    )


def apply_aviation_refinement(coa: CourseOfAction, scenario: Scenario, coa_id: str | None = None) -> CourseOfAction:
    """Rework a COA so both aviation units directly engage the hostile
    aviation and no other unit uses an engage command."""
    enemy_air = _hostile_aviation(scenario)
    allocations = []
    for a in coa.task_allocation:
        cmd = a.command
        if a.unit_type is UnitType.AVIATION and enemy_air is not None:
            cmd = EngageTarget(a.unit_id, enemy_air.unit_id, enemy_air.position)
        elif isinstance(cmd, EngageTarget):
            fallback = cmd.target if cmd.target is not None else a.position
            cmd = AttackMove(a.unit_id, fallback)
        allocations.append(TaskAllocation(a.unit_id, a.unit_type, a.alliance, a.position, cmd))
    return CourseOfAction(
        coa_id or coa.coa_id,
        coa.name,
        coa.overview + " Both aviation units are committed against the hostile aviation.",
        allocations,
    )


def initial_coa_variants(scenario: Scenario) -> list[CourseOfAction]:
    """Five distinct valid openers, used as scripted generation responses."""
    objective = scenario.terrain.objective.center
    bridges = scenario.terrain.bridges
    guns = _hostile_artillery(scenario)
    enemy_air = _hostile_aviation(scenario)

    def split_march(coa_id: str, name: str, overview: str, north: Point, south: Point) -> CourseOfAction:
        units = sorted(scenario.friendly_units(), key=lambda u: (u.position.y, u.unit_id))
        half = (len(units) + 1) // 2
        allocations = [
            _allocate(u, AttackMove(u.unit_id, north if i < half else south))
            for i, u in enumerate(units)
        ]
        allocations.sort(key=lambda a: a.unit_id)
        return CourseOfAction(coa_id, name, overview, allocations)

    def mass_march(coa_id: str, name: str, overview: str, goal: Point) -> CourseOfAction:
        allocations = [
            _allocate(u, AttackMove(u.unit_id, goal)) for u in scenario.friendly_units()
        ]
        return CourseOfAction(coa_id, name, overview, allocations)

    wolf_east = Point(bridges[1].corridor.x_max + 9, bridges[1].exit.y) if len(bridges) > 1 else objective
    bear_east = Point(bridges[2].corridor.x_max + 9, bridges[2].exit.y) if len(bridges) > 2 else objective
    north_flank = Point(min(objective.x, scenario.terrain.width - 1), max(objective.y - 20, 0))
    south_goal = guns[-1].position if guns else objective

    variants = [
        naive_sweep_coa(scenario, "coa_id_0"),
        split_march(
            "coa_id_0",
            "Twin Bridgeheads",
            "Forces split across the two central bridges, establish bridgeheads "
            "on the east bank, and reduce the defenses before exploiting east.",
            wolf_east,
            bear_east,
        ),
        mass_march(
            "coa_id_0",
            "Northern Envelopment",
            "The whole force masses on the northern axis and envelops the "
            "hostile defense from the north before turning on the objective.",
            north_flank,
        ),
        split_march(
            "coa_id_0",
            "Southern Push",
            "A supporting group fixes the central crossings while the main "
            "body punches through the southern bridge toward the hostile guns.",
            wolf_east,
            south_goal,
        ),
    ]

    # engage-heavy opener: armor is committed against the guns by direct order
    allocations = []
    for u in scenario.friendly_units():
        if u.unit_type is UnitType.ARMOR and guns:
            gun = guns[(u.unit_id // 262144) % len(guns)]
            allocations.append(_allocate(u, EngageTarget(u.unit_id, gun.unit_id, gun.position)))
        elif u.unit_type is UnitType.AVIATION and enemy_air is not None:
            allocations.append(_allocate(u, EngageTarget(u.unit_id, enemy_air.unit_id, enemy_air.position)))
        else:
            allocations.append(_allocate(u, AttackMove(u.unit_id, objective)))
    variants.append(
        CourseOfAction(
            "coa_id_0",
            "Counterbattery Strike",
            "Armor is tasked directly against the hostile artillery while the "
            "rest of the force advances on the objective under its cover.",
            allocations,
        )
    )
    return variants
