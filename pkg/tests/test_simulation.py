"""Engagement simulator: geometry, timing oracles, scoring, and determinism.

The duel expectations below are derived by hand from the published unit
stat table before being asserted:

  first shot tick = ceil((start_distance - weapon_range) / (speed * dt)) + 1

because a unit moves speed*dt per tick and acquisition happens on
pre-movement positions, and follow-up shots land every cooldown/dt ticks
when the jitter channel is disabled.
"""

from __future__ import annotations

import math
import random
from dataclasses import replace

import pytest

from coa_forge.coa import AttackMove, CourseOfAction, EngageTarget, TaskAllocation
from coa_forge.errors import InvalidCoa, InvariantViolation
from coa_forge.playbook import h2_style_coa, naive_sweep_coa
from coa_forge.scenario import Alliance, Point, UnitType
from coa_forge.simulation import (
    EventKind,
    SimConfig,
    SimEvent,
    config_from_scenario,
    crosses_water,
    default_stats,
    event_log_hash,
    events_from_jsonl,
    events_to_jsonl,
    outcome_to_dict,
    plan_route,
    run_rollout,
    score_outcome,
)

from conftest import make_unit, mini_scenario, random_valid_coa


def coa_for(pairs, coa_id="coa_id_0") -> CourseOfAction:
    allocations = [
        TaskAllocation(u.unit_id, u.unit_type, u.alliance, u.position, cmd)
        for u, cmd in pairs
    ]
    return CourseOfAction(coa_id, "Probe", "Exercise one engagement mechanic.", allocations)


def quiet_config(**kw) -> SimConfig:
    base = dict(seed=0, cooldown_jitter=0.0, max_ticks=40)
    base.update(kw)
    return SimConfig(**base)


def first_shot_tick(distance: float, weapon_range: float, speed: float, dt: float) -> int:
    return math.ceil((distance - weapon_range) / (speed * dt)) + 1


def brief(events) -> list[tuple]:
    return [(e.tick, e.kind, e.unit_id) for e in events]


# -- configuration ---------------------------------------------------------------

def test_config_rejects_bad_values():
    for kw in ({"seed": -1}, {"tick_seconds": 0.0}, {"max_ticks": 0},
               {"cooldown_jitter": 1.0}, {"cooldown_jitter": -0.1}):
        with pytest.raises(InvariantViolation):
            SimConfig(**kw)


def test_config_digest_tracks_inputs():
    assert SimConfig(seed=1).digest() == SimConfig(seed=1).digest()
    assert SimConfig(seed=1).digest() != SimConfig(seed=2).digest()
    assert SimConfig().digest() != SimConfig(reward_unit=5.0).digest()


def test_config_from_scenario_precedence(tigerclaw):
    assert config_from_scenario(tigerclaw, seed=7).seed == 7
    custom = replace(tigerclaw, sim_overrides={"max_ticks": 99})
    assert config_from_scenario(custom).max_ticks == 99
    # explicit keyword overrides beat the scenario block
    assert config_from_scenario(custom, max_ticks=7).max_ticks == 7


def test_default_stats_shape():
    stats = default_stats()
    assert set(stats) == set(UnitType)
    assert stats[UnitType.AVIATION].is_air
    assert not stats[UnitType.ARTILLERY].can_target_air
    assert not stats[UnitType.MORTAR].can_target_air
    assert stats[UnitType.ARTILLERY].speed == 0.0
    for s in stats.values():
        assert s.max_health > 0 and s.damage > 0 and s.range > 0 and s.cooldown > 0


# -- terrain geometry for movement -------------------------------------------------

def test_crosses_water_between_banks(tigerclaw):
    t = tigerclaw.terrain
    assert not crosses_water(t, Point(10.0, 60.0), Point(60.0, 60.0))  # stays west
    assert crosses_water(t, Point(60.0, 60.0), Point(100.0, 60.0))  # mid-band, no bridge
    # straight through the Bobcat corridor is dry
    assert not crosses_water(t, Point(60.0, 26.0), Point(100.0, 26.0))


def test_plan_route_is_direct_for_air_and_dry_ground(tigerclaw):
    t = tigerclaw.terrain
    assert plan_route(t, Point(60.0, 60.0), Point(100.0, 60.0), is_air=True) == [Point(100.0, 60.0)]
    assert plan_route(t, Point(10.0, 60.0), Point(60.0, 60.0), is_air=False) == [Point(60.0, 60.0)]


def test_plan_route_detours_through_nearest_bridge(tigerclaw):
    t = tigerclaw.terrain
    route = plan_route(t, Point(10.0, 60.0), Point(90.0, 60.0), is_air=False)
    # no corridor covers y=60; Bobcat (y=26) is the cheapest detour from there
    assert route == [Point(70.0, 26.0), Point(86.0, 26.0), Point(90.0, 60.0)]


def test_plan_route_picks_cheapest_total_path(tigerclaw):
    t = tigerclaw.terrain
    route = plan_route(t, Point(40.0, 200.0), Point(110.0, 215.0), is_air=False)
    assert route[0] == Point(70.0, 211.0)  # Lion, not Bear


# -- duel oracles ------------------------------------------------------------------

def test_armor_duel_timing_oracle():
    # armor: range 7, speed 2.25, damage 35, cooldown 1.0s = 10 ticks
    armor = make_unit(1, UnitType.ARMOR, Alliance.FRIENDLY, 10.0, 10.0, 160.0)
    mech = make_unit(2, UnitType.MECHANIZED_INFANTRY, Alliance.HOSTILE, 19.0, 10.0, 90.0)
    scn = mini_scenario([armor, mech])
    out = run_rollout(scn, coa_for([(armor, AttackMove(1, Point(19.0, 10.0)))]), quiet_config())

    first = first_shot_tick(9.0, 7.0, 2.25, 0.1)
    assert first == 10
    shots_to_kill = math.ceil(90.0 / 35.0)  # three rounds
    kill_tick = first + (shots_to_kill - 1) * 10
    assert brief(out.events) == [
        (10, EventKind.SHOT, 1),
        (20, EventKind.SHOT, 1),
        (kill_tick, EventKind.SHOT, 1),
        (kill_tick, EventKind.UNIT_KILLED, 2),
    ]
    assert out.total_reward == 10.0
    assert (out.friendly_casualties, out.threat_casualties) == (0, 1)
    # the defender (range 5) never got into range: the attacker halts at 6.975
    assert not any(e.kind is EventKind.SHOT and e.unit_id == 2 for e in out.events)
    assert out.ticks_elapsed == 40  # objective never seized, runs to max_ticks


def test_engage_target_matches_attack_move_for_same_geometry():
    armor = make_unit(1, UnitType.ARMOR, Alliance.FRIENDLY, 10.0, 10.0, 160.0)
    mech = make_unit(2, UnitType.MECHANIZED_INFANTRY, Alliance.HOSTILE, 19.0, 10.0, 90.0)
    scn = mini_scenario([armor, mech])
    via_move = run_rollout(scn, coa_for([(armor, AttackMove(1, Point(19.0, 10.0)))]), quiet_config())
    via_engage = run_rollout(
        scn, coa_for([(armor, EngageTarget(1, 2, Point(19.0, 10.0)))]), quiet_config()
    )
    assert event_log_hash(via_engage.events) == event_log_hash(via_move.events)


def test_artillery_one_shot_oracle():
    # artillery: range 13, damage 60; infantry: 45 health, speed 3.0
    inf = make_unit(3, UnitType.INFANTRY, Alliance.FRIENDLY, 100.0, 100.0, 45.0)
    art = make_unit(4, UnitType.ARTILLERY, Alliance.HOSTILE, 120.0, 100.0, 160.0)
    scn = mini_scenario([inf, art])
    out = run_rollout(scn, coa_for([(inf, AttackMove(3, Point(120.0, 100.0)))]), quiet_config(max_ticks=100))

    tick = first_shot_tick(20.0, 13.0, 3.0, 0.1)
    assert tick == 25
    assert brief(out.events) == [
        (25, EventKind.UNIT_KILLED, 3),
        (25, EventKind.SHOT, 4),
    ]
    assert out.total_reward == -10.0
    assert out.friendly_casualties == 1
    assert out.ticks_elapsed == 25  # simulation ends when no friendly remains


def test_simultaneous_fire_kills_both():
    # identical anti-armor teams trade fire with no first-mover advantage
    mine = make_unit(5, UnitType.ANTI_ARMOR, Alliance.FRIENDLY, 50.0, 50.0, 60.0)
    theirs = make_unit(6, UnitType.ANTI_ARMOR, Alliance.HOSTILE, 60.0, 50.0, 60.0)
    scn = mini_scenario([mine, theirs])
    out = run_rollout(scn, coa_for([(mine, AttackMove(5, Point(60.0, 50.0)))]), quiet_config(max_ticks=100))

    first = first_shot_tick(10.0, 6.0, 3.0, 0.1)
    assert first == 15
    second = first + 12  # cooldown 1.2s at 0.1s ticks
    killed = [e for e in out.events if e.kind is EventKind.UNIT_KILLED]
    assert [(e.tick, e.unit_id) for e in killed] == [(second, 5), (second, 6)]
    assert out.total_reward == 0.0
    assert (out.friendly_casualties, out.threat_casualties) == (1, 1)
    assert out.ticks_elapsed == second


def test_mortar_cannot_engage_aircraft():
    mortar = make_unit(11, UnitType.MORTAR, Alliance.FRIENDLY, 206.5, 100.0, 125.0)
    heli = make_unit(12, UnitType.AVIATION, Alliance.HOSTILE, 208.0, 100.0, 140.0)
    scn = mini_scenario([mortar, heli])
    out = run_rollout(
        scn, coa_for([(mortar, AttackMove(11, Point(206.5, 100.0)))]), quiet_config(max_ticks=100)
    )
    # the aircraft is inside mortar range the whole fight, yet only it shoots
    assert not any(e.kind is EventKind.SHOT and e.unit_id == 11 for e in out.events)
    hostile_shots = [e.tick for e in out.events if e.kind is EventKind.SHOT]
    assert hostile_shots == [1, 10, 19, 28, 37, 46]  # cooldown 0.9s = 9 ticks
    assert math.ceil(125.0 / 24.0) == len(hostile_shots)
    assert out.friendly_casualties == 1
    assert out.ticks_elapsed == 46


# -- movement, crossings, objective ------------------------------------------------

def test_bridge_crossing_east_scores_once():
    armor = make_unit(8, UnitType.ARMOR, Alliance.FRIENDLY, 190.0, 100.0, 160.0)
    scn = mini_scenario([armor], objective=Point(220.0, 100.0))
    out = run_rollout(
        scn, coa_for([(armor, AttackMove(8, Point(220.0, 100.0)))]), quiet_config(max_ticks=200)
    )
    # band center x=203 is 13.0 of travel at 0.225 per tick: flips on tick 58
    assert brief(out.events) == [
        (58, EventKind.BRIDGE_CROSS_EAST, 8),
        (107, EventKind.OBJECTIVE_REACHED, 8),
    ]
    assert out.events[0].bridge == "Span"
    assert out.total_reward == 10.0
    assert out.objective_seized
    assert out.ticks_elapsed == 107  # no hostiles and objective held


def test_bridge_retreat_west_costs_reward():
    armor = make_unit(9, UnitType.ARMOR, Alliance.FRIENDLY, 210.0, 100.0, 160.0)
    scn = mini_scenario([armor])
    out = run_rollout(
        scn, coa_for([(armor, AttackMove(9, Point(190.0, 100.0)))]), quiet_config(max_ticks=40)
    )
    assert brief(out.events) == [(32, EventKind.BRIDGE_RETREAT_WEST, 9)]
    assert out.total_reward == -10.0
    assert out.ticks_elapsed == 40


def test_air_unit_overflies_water_and_still_scores_crossing():
    heli = make_unit(10, UnitType.AVIATION, Alliance.FRIENDLY, 190.0, 150.0, 140.0)
    scn = mini_scenario([heli])
    out = run_rollout(
        scn, coa_for([(heli, AttackMove(10, Point(220.0, 150.0)))]), quiet_config(max_ticks=70)
    )
    # speed 5.0 covers the 13.0 to the centerline in 26 ticks, far from any corridor
    assert brief(out.events) == [(26, EventKind.BRIDGE_CROSS_EAST, 10)]
    assert out.events[0].bridge == "Span"  # attributed to the nearest span
    assert out.total_reward == 10.0


def test_objective_requires_ground_unit():
    heli = make_unit(10, UnitType.AVIATION, Alliance.FRIENDLY, 160.0, 89.0, 140.0)
    scn = mini_scenario([heli], objective=Point(170.0, 89.0))
    out = run_rollout(
        scn, coa_for([(heli, AttackMove(10, Point(170.0, 89.0)))]), quiet_config(max_ticks=30)
    )
    assert not out.objective_seized
    assert out.events == []
    assert out.ticks_elapsed == 30


def test_objective_march_terminates_when_field_is_clear():
    armor = make_unit(7, UnitType.ARMOR, Alliance.FRIENDLY, 160.0, 89.0, 160.0)
    scn = mini_scenario([armor], objective=Point(170.0, 89.0))
    out = run_rollout(
        scn, coa_for([(armor, AttackMove(7, Point(170.0, 89.0)))]), quiet_config()
    )
    # 10.0 to cover, radius 6.0: inside after ceil(4/0.225)=18 moves
    assert brief(out.events) == [(18, EventKind.OBJECTIVE_REACHED, 7)]
    assert out.objective_seized
    assert out.ticks_elapsed == 18
    assert out.total_reward == 0.0


def test_objective_reached_emitted_once_per_unit():
    armor = make_unit(14, UnitType.ARMOR, Alliance.FRIENDLY, 160.0, 89.0, 160.0)
    spotter = make_unit(13, UnitType.ARTILLERY, Alliance.HOSTILE, 20.0, 240.0, 160.0)
    scn = mini_scenario([armor, spotter], objective=Point(170.0, 89.0))
    out = run_rollout(
        scn, coa_for([(armor, AttackMove(14, Point(170.0, 89.0)))]), quiet_config(max_ticks=30)
    )
    # the far-off hostile keeps the fight alive well past the first arrival
    assert brief(out.events) == [(18, EventKind.OBJECTIVE_REACHED, 14)]
    assert out.ticks_elapsed == 30


def test_max_ticks_is_a_hard_stop(tigerclaw):
    out = run_rollout(tigerclaw, naive_sweep_coa(tigerclaw), quiet_config(max_ticks=1))
    assert out.ticks_elapsed == 1


# -- scoring -----------------------------------------------------------------------

def test_score_random_event_logs_against_sign_oracle():
    rng = random.Random(99)
    cfg = SimConfig(seed=0, cooldown_jitter=0.0)
    kinds = list(EventKind)
    for _ in range(30):
        events = []
        expected = 0.0
        for tick in range(1, rng.randrange(2, 40)):
            kind = rng.choice(kinds)
            alliance = rng.choice((Alliance.FRIENDLY, Alliance.HOSTILE))
            events.append(SimEvent(tick, kind, rng.randrange(1, 99), alliance))
            if kind is EventKind.BRIDGE_CROSS_EAST:
                expected += 10.0
            elif kind is EventKind.BRIDGE_RETREAT_WEST:
                expected -= 10.0
            elif kind is EventKind.UNIT_KILLED:
                expected += 10.0 if alliance is Alliance.HOSTILE else -10.0
        assert score_outcome(events, cfg) == expected


def test_score_scales_with_reward_unit():
    events = [SimEvent(1, EventKind.BRIDGE_CROSS_EAST, 1, Alliance.FRIENDLY)]
    assert score_outcome(events, SimConfig(reward_unit=25.0)) == 25.0


def test_rollout_reward_is_recomputable_from_event_log(tigerclaw):
    cfg = config_from_scenario(tigerclaw, seed=42)
    for coa in (naive_sweep_coa(tigerclaw), h2_style_coa(tigerclaw)):
        out = run_rollout(tigerclaw, coa, cfg)
        assert score_outcome(out.events, cfg) == out.total_reward


# -- whole-scenario rollouts ---------------------------------------------------------

def test_identical_inputs_reproduce_identical_logs(tigerclaw):
    coa = naive_sweep_coa(tigerclaw)
    a = run_rollout(tigerclaw, coa, config_from_scenario(tigerclaw, seed=42))
    b = run_rollout(tigerclaw, coa, config_from_scenario(tigerclaw, seed=42))
    assert event_log_hash(a.events) == event_log_hash(b.events)
    assert outcome_to_dict(a) == outcome_to_dict(b)


def test_jitter_is_the_only_stochastic_channel(tigerclaw):
    coa = naive_sweep_coa(tigerclaw)
    quiet = {
        event_log_hash(
            run_rollout(tigerclaw, coa, config_from_scenario(tigerclaw, seed=s, cooldown_jitter=0.0)).events
        )
        for s in (42, 43, 44)
    }
    assert len(quiet) == 1
    noisy = {
        event_log_hash(
            run_rollout(tigerclaw, coa, config_from_scenario(tigerclaw, seed=s)).events
        )
        for s in (42, 43, 44)
    }
    assert len(noisy) >= 2


def test_casualties_plus_survivors_conserve_the_force(tigerclaw):
    out = run_rollout(tigerclaw, naive_sweep_coa(tigerclaw), config_from_scenario(tigerclaw, seed=42))
    live_f = sum(1 for u in out.survivors if u.alliance is Alliance.FRIENDLY)
    live_h = sum(1 for u in out.survivors if u.alliance is Alliance.HOSTILE)
    assert out.friendly_casualties + live_f == 16
    assert out.threat_casualties + live_h == 17
    assert all(u.alive for u in out.survivors)


def test_rollout_rejects_invalid_coa(tigerclaw):
    coa = naive_sweep_coa(tigerclaw)
    partial = replace(coa, task_allocation=coa.task_allocation[:3])
    with pytest.raises(InvalidCoa) as err:
        run_rollout(tigerclaw, partial, config_from_scenario(tigerclaw))
    assert any(v.code == "MissingCommand" for v in err.value.violations)


def test_outcome_records_inputs(tigerclaw):
    cfg = config_from_scenario(tigerclaw, seed=45)
    out = run_rollout(tigerclaw, h2_style_coa(tigerclaw), cfg)
    assert out.coa_id == "coa_h2"
    assert out.seed == 45
    d = outcome_to_dict(out)
    assert d["seed"] == 45
    assert d["event_log_hash"] == event_log_hash(out.events)


# -- event serialization --------------------------------------------------------------

def test_event_log_round_trip(tigerclaw):
    out = run_rollout(tigerclaw, naive_sweep_coa(tigerclaw), config_from_scenario(tigerclaw))
    text = events_to_jsonl(out.events)
    assert events_from_jsonl(text) == out.events
    assert event_log_hash(events_from_jsonl(text)) == event_log_hash(out.events)


def test_random_coas_simulate_clean(tigerclaw):
    rng = random.Random(5)
    cfg = config_from_scenario(tigerclaw, seed=42, max_ticks=300)
    for _ in range(3):
        out = run_rollout(tigerclaw, random_valid_coa(tigerclaw, rng), cfg)
        assert out.ticks_elapsed <= 300
        assert score_outcome(out.events, cfg) == out.total_reward
