"""Deterministic tick-based engagement simulator.

Replays a COA against a scenario under a scripted threat AI. Identical
(scenario, coa, config) triples produce identical outcomes; the only
stochastic channel is the per-shot cooldown jitter drawn from the seeded RNG.

Per-tick phase order:
  1. decide   - threat AI picks movement goals, everyone acquires targets
                (acquisition uses pre-movement positions; a unit that holds a
                target in weapon range halts instead of moving)
  2. movement - straight-line integration, ground detours via bridge corridors
  3. combat   - off-cooldown units fire at their acquired target if it is
                still in range; damage is queued and applied simultaneously
  4. deaths   - health hits zero, UnitKilled emitted
  5. crossing - river-side transitions of friendly units emit bridge events
  6. score    - objective check, reward delta from this tick's events
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

from .coa import AttackMove, Command, CourseOfAction, EngageTarget, resolve_targets, validate_coa
from .errors import InvalidCoa, InvariantViolation
from .scenario import Alliance, Point, Scenario, Terrain, Unit, UnitType


# -- stats and config ----------------------------------------------------------

@dataclass(frozen=True)
class UnitStats:
    max_health: float
    damage: float
    range: float
    speed: float
    cooldown: float
    is_air: bool = False
    can_target_air: bool = True


def _stats_from_table(table: dict) -> dict[UnitType, UnitStats]:
    out = {}
    for name, row in table.items():
        out[UnitType.from_wire(name)] = UnitStats(
            max_health=float(row["max_health"]),
            damage=float(row["damage"]),
            range=float(row["range"]),
            speed=float(row["speed"]),
            cooldown=float(row["cooldown"]),
            is_air=bool(row.get("is_air", False)),
            can_target_air=bool(row.get("can_target_air", True)),
        )
    return out


def default_stats() -> dict[UnitType, UnitStats]:
    text = resources.files("coa_forge.data").joinpath("unit_stats.json").read_text()
    return _stats_from_table(json.loads(text))


@dataclass
class SimConfig:
    seed: int = 42
    tick_seconds: float = 0.1
    max_ticks: int = 2400
    stats: dict[UnitType, UnitStats] = field(default_factory=default_stats)
    reward_unit: float = 10.0
    cooldown_jitter: float = 0.1

    def __post_init__(self):
        if self.seed < 0:
            raise InvariantViolation("seed must be non-negative")
        if self.tick_seconds <= 0:
            raise InvariantViolation("tick_seconds must be positive")
        if self.max_ticks < 1:
            raise InvariantViolation("max_ticks must be at least 1")
        if not (0 <= self.cooldown_jitter < 1):
            raise InvariantViolation("cooldown_jitter must be in [0, 1)")

    def digest(self) -> str:
        doc = {
            "seed": self.seed,
            "tick_seconds": self.tick_seconds,
            "max_ticks": self.max_ticks,
            "reward_unit": self.reward_unit,
            "cooldown_jitter": self.cooldown_jitter,
            "stats": {
                t.value: [s.max_health, s.damage, s.range, s.speed, s.cooldown, s.is_air, s.can_target_air]
                for t, s in sorted(self.stats.items(), key=lambda kv: kv[0].value)
            },
        }
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def config_from_scenario(scenario: Scenario, seed: int = 42, **overrides) -> SimConfig:
    """SimConfig from defaults, the scenario's optional sim block, then kwargs."""
    values: dict = {"seed": seed}
    block = scenario.sim_overrides or {}
    for key in ("tick_seconds", "max_ticks", "reward_unit", "cooldown_jitter", "seed"):
        if key in block:
            values[key] = block[key]
    if "stats" in block:
        merged = default_stats()
        merged.update(_stats_from_table(block["stats"]))
        values["stats"] = merged
    values.update(overrides)
    return SimConfig(**values)


# -- events ----------------------------------------------------------------------

class EventKind(Enum):
    SHOT = "Shot"
    UNIT_KILLED = "UnitKilled"
    BRIDGE_CROSS_EAST = "BridgeCrossEast"
    BRIDGE_RETREAT_WEST = "BridgeRetreatWest"
    OBJECTIVE_REACHED = "ObjectiveReached"


_KIND_ORDER = {k: i for i, k in enumerate(EventKind)}


@dataclass(frozen=True)
class SimEvent:
    tick: int
    kind: EventKind
    unit_id: int
    alliance: Alliance
    object_id: int | None = None
    bridge: str | None = None


def event_to_dict(e: SimEvent) -> dict:
    return {
        "tick": e.tick,
        "kind": e.kind.value,
        "unit_id": e.unit_id,
        "alliance": e.alliance.value,
        "object_id": e.object_id,
        "bridge": e.bridge,
    }


def event_from_dict(d: dict) -> SimEvent:
    return SimEvent(
        tick=int(d["tick"]),
        kind=EventKind(d["kind"]),
        unit_id=int(d["unit_id"]),
        alliance=Alliance(d["alliance"]),
        object_id=d.get("object_id"),
        bridge=d.get("bridge"),
    )


def events_to_jsonl(events: list[SimEvent]) -> str:
    return "\n".join(json.dumps(event_to_dict(e)) for e in events)


def events_from_jsonl(text: str) -> list[SimEvent]:
    return [event_from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def event_log_hash(events: list[SimEvent]) -> str:
    return hashlib.sha256(events_to_jsonl(events).encode()).hexdigest()


def score_outcome(events: list[SimEvent], config: SimConfig) -> float:
    """Recompute total reward from an event log alone."""
    r = config.reward_unit
    total = 0.0
    for e in events:
        if e.kind is EventKind.BRIDGE_CROSS_EAST:
            total += r
        elif e.kind is EventKind.BRIDGE_RETREAT_WEST:
            total -= r
        elif e.kind is EventKind.UNIT_KILLED:
            total += r if e.alliance is Alliance.HOSTILE else -r
    return total


# -- outcome -----------------------------------------------------------------------

@dataclass
class SimOutcome:
    total_reward: float
    friendly_casualties: int
    threat_casualties: int
    ticks_elapsed: int
    objective_seized: bool
    events: list[SimEvent]
    survivors: list[Unit]
    coa_id: str | None = None
    seed: int | None = None


def outcome_to_dict(o: SimOutcome) -> dict:
    from .scenario import units_to_wire

    return {
        "coa_id": o.coa_id,
        "seed": o.seed,
        "total_reward": o.total_reward,
        "friendly_casualties": o.friendly_casualties,
        "threat_casualties": o.threat_casualties,
        "ticks_elapsed": o.ticks_elapsed,
        "objective_seized": o.objective_seized,
        "event_log_hash": event_log_hash(o.events),
        "events": [event_to_dict(e) for e in o.events],
        "survivors": units_to_wire(o.survivors),
    }


# -- geometry helpers ----------------------------------------------------------------

_ARRIVE = 1e-9          # exact-arrival tolerance for waypoints
_PATROL_ARRIVE = 2.0    # patrol legs advance inside this radius


def _segment_y_range_in_band(p: Point, q: Point, x_lo: float, x_hi: float) -> tuple[float, float] | None:
    """y-interval of the part of segment pq with x in [x_lo, x_hi], or None."""
    lo, hi = min(p.x, q.x), max(p.x, q.x)
    if hi < x_lo or lo > x_hi:
        return None
    if p.x == q.x:
        return (min(p.y, q.y), max(p.y, q.y))
    cx_lo, cx_hi = max(lo, x_lo), min(hi, x_hi)
    slope = (q.y - p.y) / (q.x - p.x)
    ya = p.y + (cx_lo - p.x) * slope
    yb = p.y + (cx_hi - p.x) * slope
    return (min(ya, yb), max(ya, yb))


def crosses_water(terrain: Terrain, p: Point, q: Point) -> bool:
    """True if the straight segment pq touches river cells outside every corridor."""
    band = terrain.river
    yr = _segment_y_range_in_band(p, q, band.x_min, band.x_max)
    if yr is None:
        return False
    for b in terrain.bridges:
        c = b.corridor
        if c.x_min <= band.x_min and c.x_max >= band.x_max:
            if c.y_min <= yr[0] and yr[1] <= c.y_max:
                return False
    return True


def plan_route(terrain: Terrain, start: Point, goal: Point, is_air: bool) -> list[Point]:
    """Waypoints from start to goal; ground units detour via the cheapest bridge."""
    if is_air or not crosses_water(terrain, start, goal):
        return [goal]
    best: list[Point] | None = None
    best_len = math.inf
    for b in terrain.bridges:
        west = Point(b.corridor.x_min, b.exit.y)
        east = Point(b.corridor.x_max, b.exit.y)
        first, second = (west, east) if start.x <= b.exit.x else (east, west)
        length = (
            start.distance_to(first) + first.distance_to(second) + second.distance_to(goal)
        )
        if length < best_len:
            best_len = length
            best = [first, second, goal]
    return best if best is not None else [goal]


# -- simulation state -----------------------------------------------------------------

class _SimUnit:
    __slots__ = (
        "unit_id", "unit_type", "alliance", "stats", "pos", "health", "alive",
        "side", "command", "post", "patrol", "patrol_idx", "next_ready",
        "combat_target", "move_goal", "route", "route_goal", "moved",
    )

    def __init__(self, unit: Unit, stats: UnitStats, side: str):
        self.unit_id = unit.unit_id
        self.unit_type = unit.unit_type
        self.alliance = unit.alliance
        self.stats = stats
        self.pos = unit.position
        self.health = unit.health
        self.alive = unit.health > 0
        self.side = side
        self.command: Command | None = None
        self.post: Point | None = None
        self.patrol: list[Point] = []
        self.patrol_idx = 0
        self.next_ready = 0.0
        self.combat_target: int | None = None
        self.move_goal: Point | None = None
        self.route: list[Point] = []
        self.route_goal: Point | None = None
        self.moved = False


class SimState:
    """Mutable world state; step() advances it one tick."""

    def __init__(self, scenario: Scenario, config: SimConfig):
        self.scenario = scenario
        self.config = config
        self.rng = random.Random(config.seed)
        self.tick = 0
        self.events: list[SimEvent] = []
        self.score = 0.0
        self.objective_seized = False
        self._objective_hit: set[int] = set()
        self.units: dict[int, _SimUnit] = {}
        for unit in sorted(scenario.units, key=lambda u: u.unit_id):
            if unit.unit_type not in config.stats:
                raise InvariantViolation(f"no stats for unit type {unit.unit_type.value}")
            side = scenario.terrain.side_of_river(unit.position)
            self.units[unit.unit_id] = _SimUnit(unit, config.stats[unit.unit_type], side)

    def living(self, alliance: Alliance) -> list[_SimUnit]:
        return [u for u in self.units.values() if u.alive and u.alliance is alliance]


def initial_state(scenario: Scenario, coa: CourseOfAction, config: SimConfig) -> SimState:
    """Wire a validated COA and the threat AI posture into a fresh state."""
    state = SimState(scenario, config)
    coa = resolve_targets(coa, scenario)
    for alloc in coa.task_allocation:
        su = state.units.get(alloc.unit_id)
        if su is not None:
            su.command = alloc.command

    defended = [b for b in scenario.terrain.bridges[1:]] or list(scenario.terrain.bridges)
    patrol = [b.exit for b in defended]
    for unit in scenario.units:
        if unit.alliance is not Alliance.HOSTILE:
            continue
        su = state.units[unit.unit_id]
        if su.stats.is_air and patrol:
            su.patrol = patrol
        else:
            su.post = unit.post if unit.post is not None else unit.position
    return state


def _acquire(unit: _SimUnit, enemies: list[_SimUnit]) -> int | None:
    """Nearest living targetable enemy inside weapon range; ties to lowest id."""
    r2 = unit.stats.range * unit.stats.range
    best: tuple[float, int] | None = None
    for e in enemies:
        if e.stats.is_air and not unit.stats.can_target_air:
            continue
        dx = e.pos.x - unit.pos.x
        dy = e.pos.y - unit.pos.y
        d2 = dx * dx + dy * dy
        if d2 <= r2 and (best is None or (d2, e.unit_id) < best):
            best = (d2, e.unit_id)
    return best[1] if best else None


def _in_range(a: _SimUnit, b: _SimUnit) -> bool:
    dx = b.pos.x - a.pos.x
    dy = b.pos.y - a.pos.y
    return dx * dx + dy * dy <= a.stats.range * a.stats.range


def step(state: SimState) -> SimState:
    """Advance exactly one tick. Returns the same (mutated) state."""
    terrain = state.scenario.terrain
    cfg = state.config
    state.tick += 1
    now = state.tick * cfg.tick_seconds
    tick_events: list[SimEvent] = []

    friendlies = state.living(Alliance.FRIENDLY)
    hostiles = state.living(Alliance.HOSTILE)

    # 1. decide
    for su in state.units.values():
        if not su.alive:
            continue
        su.moved = False
        su.combat_target = None
        su.move_goal = None
        if su.alliance is Alliance.HOSTILE:
            if su.patrol:
                wp = su.patrol[su.patrol_idx]
                if su.pos.distance_to(wp) <= _PATROL_ARRIVE:
                    su.patrol_idx = (su.patrol_idx + 1) % len(su.patrol)
                    wp = su.patrol[su.patrol_idx]
                su.move_goal = wp
            elif su.post is not None and su.pos.distance_to(su.post) > _ARRIVE:
                su.move_goal = su.post
            su.combat_target = _acquire(su, friendlies)
        else:
            cmd = su.command
            if isinstance(cmd, EngageTarget):
                target = state.units.get(cmd.target_unit_id)
                if target is None or not target.alive:
                    # designated target gone: fall back to attack-move on its
                    # last known coordinates
                    last = target.pos if target is not None else (cmd.target or su.pos)
                    cmd = AttackMove(su.unit_id, last)
                    su.command = cmd
                else:
                    if _in_range(su, target):
                        su.combat_target = target.unit_id
                    else:
                        su.move_goal = target.pos
            if isinstance(cmd, AttackMove):
                su.combat_target = _acquire(su, hostiles)
                if su.combat_target is None and su.pos.distance_to(cmd.target) > _ARRIVE:
                    su.move_goal = cmd.target
            elif cmd is None:
                # uncommanded friendlies (bare test setups) hold and defend
                su.combat_target = _acquire(su, hostiles)

    # 2. movement
    for su in state.units.values():
        if not su.alive or su.move_goal is None or su.stats.speed <= 0:
            continue
        if su.route_goal != su.move_goal:
            su.route = plan_route(terrain, su.pos, su.move_goal, su.stats.is_air)
            su.route_goal = su.move_goal
        budget = su.stats.speed * cfg.tick_seconds
        while budget > _ARRIVE and su.route:
            wp = su.route[0]
            d = su.pos.distance_to(wp)
            if d <= budget:
                candidate = wp
                spent = d
            else:
                f = budget / d
                candidate = Point(su.pos.x + (wp.x - su.pos.x) * f, su.pos.y + (wp.y - su.pos.y) * f)
                spent = budget
            if not su.stats.is_air and not terrain.is_passable_ground(candidate):
                break
            su.pos = candidate
            su.moved = True
            budget -= spent
            if candidate == wp:
                su.route.pop(0)

    # 3. combat (simultaneous damage)
    damage: dict[int, float] = {}
    for su in state.units.values():
        if not su.alive or su.combat_target is None or now < su.next_ready:
            continue
        target = state.units.get(su.combat_target)
        if target is None or not target.alive or not _in_range(su, target):
            continue
        if target.stats.is_air and not su.stats.can_target_air:
            continue
        damage[target.unit_id] = damage.get(target.unit_id, 0.0) + su.stats.damage
        jitter = cfg.cooldown_jitter
        su.next_ready = now + su.stats.cooldown * state.rng.uniform(1 - jitter, 1 + jitter)
        tick_events.append(
            SimEvent(state.tick, EventKind.SHOT, su.unit_id, su.alliance, object_id=target.unit_id)
        )

    # 4. deaths
    for unit_id, dmg in damage.items():
        su = state.units[unit_id]
        su.health = max(0.0, su.health - dmg)
        if su.alive and su.health == 0.0:
            su.alive = False
            tick_events.append(SimEvent(state.tick, EventKind.UNIT_KILLED, su.unit_id, su.alliance))

    # 5. river-side transitions
    for su in state.units.values():
        if not su.moved:
            continue
        side = terrain.side_of_river(su.pos)
        if side == su.side:
            continue
        if su.alive and su.alliance is Alliance.FRIENDLY:
            kind = EventKind.BRIDGE_CROSS_EAST if side == "east" else EventKind.BRIDGE_RETREAT_WEST
            tick_events.append(
                SimEvent(state.tick, kind, su.unit_id, su.alliance, bridge=_bridge_at(terrain, su.pos))
            )
        su.side = side

    # 6. objective check, then score this tick's events in final order
    obj = terrain.objective
    for su in state.units.values():
        if (
            su.alive
            and su.alliance is Alliance.FRIENDLY
            and not su.stats.is_air
            and su.unit_id not in state._objective_hit
            and su.pos.distance_to(obj.center) <= obj.radius
        ):
            state._objective_hit.add(su.unit_id)
            state.objective_seized = True
            tick_events.append(
                SimEvent(state.tick, EventKind.OBJECTIVE_REACHED, su.unit_id, su.alliance)
            )

    tick_events.sort(key=lambda e: (e.unit_id, _KIND_ORDER[e.kind], e.object_id or 0))
    for e in tick_events:
        if e.kind is EventKind.BRIDGE_CROSS_EAST:
            state.score += cfg.reward_unit
        elif e.kind is EventKind.BRIDGE_RETREAT_WEST:
            state.score -= cfg.reward_unit
        elif e.kind is EventKind.UNIT_KILLED:
            state.score += cfg.reward_unit if e.alliance is Alliance.HOSTILE else -cfg.reward_unit

    state.events.extend(tick_events)
    return state


def _bridge_at(terrain: Terrain, pos: Point) -> str | None:
    for b in terrain.bridges:
        if b.corridor.contains(pos):
            return b.name
    best = None
    best_dy = math.inf
    for b in terrain.bridges:
        dy = abs(b.exit.y - pos.y)
        if dy < best_dy:
            best_dy = dy
            best = b.name
    return best


def sim_done(state: SimState) -> bool:
    friendly_alive = any(u.alive for u in state.units.values() if u.alliance is Alliance.FRIENDLY)
    hostile_alive = any(u.alive for u in state.units.values() if u.alliance is Alliance.HOSTILE)
    if not friendly_alive:
        return True
    if not hostile_alive and state.objective_seized:
        return True
    return state.tick >= state.config.max_ticks


def run_rollout(scenario: Scenario, coa: CourseOfAction, config: SimConfig) -> SimOutcome:
    """Validate, then simulate to termination. Deterministic per (inputs, seed)."""
    report = validate_coa(coa, scenario)
    if not report.valid:
        raise InvalidCoa(
            f"COA {coa.coa_id} fails validation with {len(report.violations)} violation(s): "
            + "; ".join(v.message for v in report.violations[:5]),
            violations=report.violations,
        )
    state = initial_state(scenario, coa, config)
    while not sim_done(state):
        step(state)

    initial_f = sum(1 for u in scenario.units if u.alliance is Alliance.FRIENDLY and u.alive)
    initial_h = sum(1 for u in scenario.units if u.alliance is Alliance.HOSTILE and u.alive)
    live_f = len(state.living(Alliance.FRIENDLY))
    live_h = len(state.living(Alliance.HOSTILE))
    survivors = [
        Unit(su.unit_id, su.unit_type, su.alliance, su.pos, su.health)
        for su in state.units.values()
        if su.alive
    ]
    return SimOutcome(
        total_reward=state.score,
        friendly_casualties=initial_f - live_f,
        threat_casualties=initial_h - live_h,
        ticks_elapsed=state.tick,
        objective_seized=state.objective_seized,
        events=state.events,
        survivors=survivors,
        coa_id=coa.coa_id,
        seed=config.seed,
    )
