"""Scenario model: units, terrain, and the bundled TigerClaw setup.

The map is a continuous 2D plane split by a north-south river band. Bridges
carve passable corridors through the band. Coordinates grow eastward in x and
northward in y; they are authoritative over any prose description.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import InvariantViolation, MalformedDocument


class Alliance(Enum):
    FRIENDLY = "Friendly"
    HOSTILE = "Hostile"

    @classmethod
    def from_wire(cls, value: str) -> "Alliance":
        try:
            return cls(value)
        except ValueError:
            raise InvariantViolation(f"unknown alliance {value!r}") from None


class UnitType(Enum):
    """The eight unit types, valued by their wire-format names."""

    ARMOR = "Armor"
    MECHANIZED_INFANTRY = "Mechanized infantry"
    MORTAR = "Mortar"
    AVIATION = "Aviation"
    RECONNAISSANCE = "Reconnaissance"
    ARTILLERY = "Artillery"
    ANTI_ARMOR = "Anti-Armor"
    INFANTRY = "Infantry"

    @classmethod
    def from_wire(cls, value: str) -> "UnitType":
        try:
            return cls(value)
        except ValueError:
            raise InvariantViolation(f"unknown unit type {value!r}") from None


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def distance_to(self, other: "Point") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle, inclusive on all edges."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def contains(self, p: Point) -> bool:
        return self.x_min <= p.x <= self.x_max and self.y_min <= p.y <= self.y_max


@dataclass(frozen=True)
class Bridge:
    """A river crossing.

    Attributes:
        name: bridge callsign, e.g. "Bobcat".
        exit: the published exit coordinate of the crossing.
        corridor: rectangle of ground-passable cells spanning the river band.
    """

    name: str
    exit: Point
    corridor: Rect


@dataclass(frozen=True)
class RiverBand:
    """Vertical band of water cells; impassable to ground outside corridors."""

    x_min: float
    x_max: float

    @property
    def center(self) -> float:
        return (self.x_min + self.x_max) / 2.0


@dataclass(frozen=True)
class Objective:
    center: Point
    radius: float


@dataclass(frozen=True)
class Terrain:
    width: float
    height: float
    river: RiverBand
    bridges: tuple[Bridge, ...]
    objective: Objective

    def in_bounds(self, p: Point) -> bool:
        return 0.0 <= p.x <= self.width and 0.0 <= p.y <= self.height

    def is_river(self, p: Point) -> bool:
        """True for water cells: inside the band and not on a bridge."""
        if not (self.river.x_min <= p.x <= self.river.x_max):
            return False
        return not any(b.corridor.contains(p) for b in self.bridges)

    def is_passable_ground(self, p: Point) -> bool:
        return self.in_bounds(p) and not self.is_river(p)

    def side_of_river(self, p: Point) -> str:
        """"west" or "east", split at the band's centerline."""
        return "west" if p.x < self.river.center else "east"


@dataclass(frozen=True)
class Unit:
    """A single maneuver unit.

    health is a non-negative real; a unit is alive iff health > 0. post is
    the optional assigned defensive position used by the threat AI; it
    defaults to the start position.
    """

    unit_id: int
    unit_type: UnitType
    alliance: Alliance
    position: Point
    health: float
    post: Point | None = None

    @property
    def alive(self) -> bool:
        return self.health > 0


@dataclass(frozen=True)
class Scenario:
    terrain: Terrain
    units: tuple[Unit, ...]
    mission_objective_text: str
    terrain_text: str
    sim_overrides: dict = field(default_factory=dict, compare=False)

    def friendly_units(self) -> list[Unit]:
        return [u for u in self.units if u.alliance is Alliance.FRIENDLY]

    def hostile_units(self) -> list[Unit]:
        return [u for u in self.units if u.alliance is Alliance.HOSTILE]

    def unit_by_id(self, unit_id: int) -> Unit | None:
        for u in self.units:
            if u.unit_id == unit_id:
                return u
        return None


# -- wire format --------------------------------------------------------------

def units_to_wire(units: list[Unit] | tuple[Unit, ...]) -> list[dict]:
    """Serialize units to the JSON array fed to the model."""
    return [
        {
            "unit_id": u.unit_id,
            "unit_type": u.unit_type.value,
            "alliance": u.alliance.value,
            "position": {"x": float(u.position.x), "y": float(u.position.y)},
        }
        for u in units
    ]


def _point_from_wire(obj, context: str) -> Point:
    if not isinstance(obj, dict) or "x" not in obj or "y" not in obj:
        raise MalformedDocument(f"{context}: position must be an object with x and y")
    try:
        return Point(float(obj["x"]), float(obj["y"]))
    except (TypeError, ValueError):
        raise MalformedDocument(f"{context}: non-numeric coordinate") from None


# -- document loading ---------------------------------------------------------

def _default_max_health() -> dict[UnitType, float]:
    text = resources.files("coa_forge.data").joinpath("unit_stats.json").read_text()
    table = json.loads(text)
    return {UnitType(name): float(row["max_health"]) for name, row in table.items()}


def load_scenario(document: dict) -> Scenario:
    """Build a Scenario from a parsed config document.

    Raises MalformedDocument for structural problems and InvariantViolation
    for domain violations (duplicate ids, out-of-bounds positions, corridors
    that miss their exit, negative health).
    """
    if not isinstance(document, dict):
        raise MalformedDocument("scenario document must be a JSON object")
    for key in ("terrain", "units", "mission_objective_text", "terrain_text"):
        if key not in document:
            raise MalformedDocument(f"scenario document missing {key!r}")

    t = document["terrain"]
    if not isinstance(t, dict):
        raise MalformedDocument("terrain must be an object")
    try:
        width = float(t["width"])
        height = float(t["height"])
        river = RiverBand(float(t["river"]["x_min"]), float(t["river"]["x_max"]))
        objective = Objective(
            Point(float(t["objective"]["x"]), float(t["objective"]["y"])),
            float(t["objective"]["radius"]),
        )
        bridge_rows = t["bridges"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedDocument(f"bad terrain block: {exc}") from None

    bridges = []
    for row in bridge_rows:
        try:
            corridor = Rect(
                float(row["corridor"]["x_min"]),
                float(row["corridor"]["y_min"]),
                float(row["corridor"]["x_max"]),
                float(row["corridor"]["y_max"]),
            )
            bridge = Bridge(str(row["name"]), _point_from_wire(row["exit"], "bridge exit"), corridor)
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedDocument(f"bad bridge row: {exc}") from None
        bridges.append(bridge)

    terrain = Terrain(width, height, river, tuple(bridges), objective)

    if not (0 <= river.x_min <= river.x_max <= width):
        raise InvariantViolation("river band outside map bounds")
    if not terrain.in_bounds(objective.center):
        raise InvariantViolation("objective outside map bounds")
    for b in terrain.bridges:
        if not b.corridor.contains(b.exit):
            raise InvariantViolation(f"bridge {b.name}: corridor does not contain exit")

    defaults = _default_max_health()
    units: list[Unit] = []
    seen: set[int] = set()
    for row in document["units"]:
        if not isinstance(row, dict):
            raise MalformedDocument("unit row must be an object")
        try:
            unit_id = int(row["unit_id"])
        except (KeyError, TypeError, ValueError):
            raise MalformedDocument("unit row missing integer unit_id") from None
        if unit_id < 0:
            raise InvariantViolation(f"unit {unit_id}: negative unit_id")
        if unit_id in seen:
            raise InvariantViolation(f"duplicate unit_id {unit_id}")
        seen.add(unit_id)
        try:
            unit_type = UnitType.from_wire(row["unit_type"])
            alliance = Alliance.from_wire(row["alliance"])
        except KeyError as exc:
            raise MalformedDocument(f"unit {unit_id}: missing {exc}") from None
        position = _point_from_wire(row.get("position"), f"unit {unit_id}")
        if not terrain.in_bounds(position):
            raise InvariantViolation(f"unit {unit_id}: position outside map bounds")
        health = float(row["health"]) if "health" in row else defaults[unit_type]
        if health < 0:
            raise InvariantViolation(f"unit {unit_id}: negative health")
        post = _point_from_wire(row["post"], f"unit {unit_id} post") if "post" in row else None
        if post is not None and not terrain.in_bounds(post):
            raise InvariantViolation(f"unit {unit_id}: post outside map bounds")
        units.append(Unit(unit_id, unit_type, alliance, position, health, post))

    return Scenario(
        terrain=terrain,
        units=tuple(units),
        mission_objective_text=str(document["mission_objective_text"]),
        terrain_text=str(document["terrain_text"]),
        sim_overrides=dict(document.get("sim", {})),
    )


def load_scenario_text(text: str) -> Scenario:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"scenario is not valid JSON: {exc}") from None
    return load_scenario(document)


def load_scenario_path(path: str | Path) -> Scenario:
    return load_scenario_text(Path(path).read_text())


def scenario_to_document(scenario: Scenario) -> dict:
    """Inverse of load_scenario (modulo health defaulting, which is explicit here)."""
    t = scenario.terrain
    units = []
    for u in scenario.units:
        row = {
            "unit_id": u.unit_id,
            "unit_type": u.unit_type.value,
            "alliance": u.alliance.value,
            "position": {"x": u.position.x, "y": u.position.y},
            "health": u.health,
        }
        if u.post is not None:
            row["post"] = {"x": u.post.x, "y": u.post.y}
        units.append(row)
    return {
        "terrain": {
            "width": t.width,
            "height": t.height,
            "river": {"x_min": t.river.x_min, "x_max": t.river.x_max},
            "bridges": [
                {
                    "name": b.name,
                    "exit": {"x": b.exit.x, "y": b.exit.y},
                    "corridor": {
                        "x_min": b.corridor.x_min,
                        "y_min": b.corridor.y_min,
                        "x_max": b.corridor.x_max,
                        "y_max": b.corridor.y_max,
                    },
                }
                for b in t.bridges
            ],
            "objective": {
                "x": t.objective.center.x,
                "y": t.objective.center.y,
                "radius": t.objective.radius,
            },
        },
        "units": units,
        "mission_objective_text": scenario.mission_objective_text,
        "terrain_text": scenario.terrain_text,
        "sim": dict(scenario.sim_overrides),
    }


def tigerclaw_default() -> Scenario:
    """The bundled canonical scenario: 16 friendly vs 17 hostile units."""
    text = resources.files("coa_forge.data").joinpath("scenarios/tigerclaw.json").read_text()
    return load_scenario_text(text)
