"""Course-of-action schema: command grammar, document parsing, validation.

A COA is a JSON object keyed by coa_id whose body carries an overview, a name,
and one task allocation per friendly unit. Each allocation holds exactly one
command in the two-verb grammar:

    attack_move_unit(unit_id, target_x, target_y)
    engage_target_unit(unit_id, target_unit_id, target_x, target_y)

Model responses also use a ``move_unit`` alias and a two-argument engage form
whose target coordinates are back-filled from the scenario later; canonical
serialization always emits the full forms above once coordinates are known.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace

from .errors import (
    ArityMismatch,
    CommandParseError,
    MalformedArgument,
    NoJsonFound,
    SchemaError,
    UnknownVerb,
)
from .scenario import Alliance, Point, Scenario, UnitType


# -- commands -----------------------------------------------------------------

@dataclass(frozen=True)
class AttackMove:
    """Move to target, engaging hostile units encountered on the way."""

    unit_id: int
    target: Point


@dataclass(frozen=True)
class EngageTarget:
    """Engage one designated hostile unit, closing to it first if needed.

    target is the hostile's reported coordinate; None means it is still
    pending back-fill from the scenario (two-argument wire form).
    """

    unit_id: int
    target_unit_id: int
    target: Point | None = None

    def __post_init__(self):
        if self.unit_id == self.target_unit_id:
            raise MalformedArgument(
                f"unit {self.unit_id} cannot engage itself", unit_id=self.unit_id
            )


Command = AttackMove | EngageTarget

_COMMAND_SHAPE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s*$", re.DOTALL)
_DECIMAL = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)$")
_INTEGER = re.compile(r"^\d+$")


def _coord(raw: str) -> float:
    raw = raw.strip()
    if not _DECIMAL.match(raw):
        raise MalformedArgument(f"expected numeric literal, got {raw!r}")
    return float(raw)


def _unit_ref(raw: str) -> int:
    raw = raw.strip()
    if not _INTEGER.match(raw):
        raise MalformedArgument(f"expected unit id, got {raw!r}")
    return int(raw)


def parse_command(text: str) -> Command:
    """Parse one command statement.

    Grammar: ``identifier '(' arg (',' arg)* ')'`` with whitespace tolerated
    around every token. Raises UnknownVerb, ArityMismatch, or
    MalformedArgument; anything not shaped like a call is MalformedArgument.
    """
    if not isinstance(text, str):
        raise MalformedArgument("command must be a string")
    m = _COMMAND_SHAPE.match(text)
    if not m:
        raise MalformedArgument(f"not a command statement: {text!r}")
    verb, inner = m.group(1), m.group(2).strip()
    args = [] if inner == "" else inner.split(",")

    if verb in ("attack_move_unit", "move_unit"):
        if len(args) != 3:
            raise ArityMismatch(f"{verb} takes 3 arguments, got {len(args)}")
        return AttackMove(_unit_ref(args[0]), Point(_coord(args[1]), _coord(args[2])))
    if verb == "engage_target_unit":
        if len(args) == 4:
            return EngageTarget(
                _unit_ref(args[0]), _unit_ref(args[1]), Point(_coord(args[2]), _coord(args[3]))
            )
        if len(args) == 2:
            return EngageTarget(_unit_ref(args[0]), _unit_ref(args[1]), None)
        raise ArityMismatch(f"engage_target_unit takes 4 (or 2) arguments, got {len(args)}")
    raise UnknownVerb(f"unknown verb {verb!r}")


def _fmt_float(v: float) -> str:
    s = repr(float(v))
    if "e" in s or "E" in s:
        s = format(float(v), ".17f").rstrip("0")
        if s.endswith("."):
            s += "0"
    return s


def command_to_text(cmd: Command) -> str:
    """Canonical statement for a command; always the full verb forms."""
    if isinstance(cmd, AttackMove):
        return f"attack_move_unit({cmd.unit_id}, {_fmt_float(cmd.target.x)}, {_fmt_float(cmd.target.y)})"
    if cmd.target is None:
        return f"engage_target_unit({cmd.unit_id}, {cmd.target_unit_id})"
    return (
        f"engage_target_unit({cmd.unit_id}, {cmd.target_unit_id}, "
        f"{_fmt_float(cmd.target.x)}, {_fmt_float(cmd.target.y)})"
    )


# -- COA objects ----------------------------------------------------------------

_ALLOCATION_KEYS = ("unit_id", "unit_type", "alliance", "position", "command")
_BODY_KEYS = ("overview", "name", "task_allocation")


@dataclass
class TaskAllocation:
    unit_id: int
    unit_type: UnitType
    alliance: Alliance
    position: Point
    command: Command
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command.unit_id != self.unit_id:
            raise SchemaError(
                f"allocation {self.unit_id}: command names unit {self.command.unit_id}",
                unit_id=self.unit_id,
            )


@dataclass
class CourseOfAction:
    coa_id: str
    name: str
    overview: str
    task_allocation: list[TaskAllocation]
    extra: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list, compare=False)

    def __post_init__(self):
        # blank strings would round-trip to an unparseable document
        if not self.name.strip():
            raise SchemaError(f"{self.coa_id}: empty name")
        if not self.overview.strip():
            raise SchemaError(f"{self.coa_id}: empty overview")

    def allocation_for(self, unit_id: int) -> TaskAllocation | None:
        for a in self.task_allocation:
            if a.unit_id == unit_id:
                return a
        return None


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    unit_id: int | None = None


@dataclass
class ValidationReport:
    valid: bool
    violations: list[Violation]


# -- document extraction --------------------------------------------------------

def _balanced_spans(text: str) -> list[str]:
    spans = []
    depth = 0
    start = 0
    in_str = False
    escaped = False
    for i, ch in enumerate(text):
        if depth > 0 and in_str:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_str = False
            continue
        if ch == '"' and depth > 0:
            in_str = True
        elif ch == "{":
            depth += 1
            if depth == 1:
                start = i
        elif ch == "}" and depth > 0:
            depth -= 1
            if depth == 0:
                spans.append(text[start : i + 1])
    return spans


def extract_json_object(text: str) -> dict:
    """Pull the single top-level JSON object out of a model response.

    Markdown fences and surrounding prose are ignored. Zero decodable objects
    is NoJsonFound; more than one is SchemaError (ambiguous response).
    """
    spans = _balanced_spans(text)
    decoded = []
    first_err = None
    for span in spans:
        try:
            obj = json.loads(span)
        except json.JSONDecodeError as exc:
            if first_err is None:
                first_err = exc
            continue
        if isinstance(obj, dict):
            decoded.append(obj)
    if not decoded:
        if first_err is not None:
            raise NoJsonFound(f"brace-balanced text is not valid JSON: {first_err}")
        raise NoJsonFound("no JSON object in response")
    if len(decoded) > 1:
        raise SchemaError(f"response contains {len(decoded)} top-level JSON objects")
    return decoded[0]


def _parse_allocation(coa_id: str, row, warnings: list[str]) -> TaskAllocation:
    if not isinstance(row, dict):
        raise SchemaError(f"{coa_id}: task_allocation entries must be objects")
    for key in _ALLOCATION_KEYS:
        if key not in row:
            raise SchemaError(f"{coa_id}: allocation missing {key!r}")
    try:
        unit_id = int(row["unit_id"])
    except (TypeError, ValueError):
        raise SchemaError(f"{coa_id}: allocation unit_id is not an integer") from None
    try:
        unit_type = UnitType.from_wire(row["unit_type"])
        alliance = Alliance.from_wire(row["alliance"])
    except Exception as exc:
        raise SchemaError(f"{coa_id} unit {unit_id}: {exc}", unit_id=unit_id) from None
    pos = row["position"]
    if not isinstance(pos, dict) or "x" not in pos or "y" not in pos:
        raise SchemaError(f"{coa_id} unit {unit_id}: position must have x and y", unit_id=unit_id)
    try:
        position = Point(float(pos["x"]), float(pos["y"]))
    except (TypeError, ValueError):
        raise SchemaError(f"{coa_id} unit {unit_id}: non-numeric position", unit_id=unit_id) from None

    try:
        cmd = parse_command(row["command"])
    except CommandParseError as exc:
        raise type(exc)(f"{coa_id} unit {unit_id}: {exc}", unit_id=unit_id) from None
    if cmd.unit_id != unit_id:
        # The allocation's unit_id is authoritative when the statement disagrees.
        warnings.append(
            f"{coa_id}: allocation {unit_id} command referenced unit "
            f"{cmd.unit_id}; using the allocation's unit_id"
        )
        try:
            cmd = replace(cmd, unit_id=unit_id)
        except CommandParseError as exc:
            raise type(exc)(f"{coa_id} unit {unit_id}: {exc}", unit_id=unit_id) from None

    extra = {k: v for k, v in row.items() if k not in _ALLOCATION_KEYS}
    return TaskAllocation(unit_id, unit_type, alliance, position, cmd, extra)


def parse_coa_document(text: str, scenario: Scenario | None = None) -> list[CourseOfAction]:
    """Parse a model response into COAs, one per top-level key.

    When a scenario is supplied, pending engage-target coordinates are
    back-filled from it (unknown targets stay pending for validation to flag).
    """
    obj = extract_json_object(text)
    if not obj:
        raise SchemaError("JSON object holds no COAs")
    coas = []
    for coa_id, body in obj.items():
        if not isinstance(body, dict):
            raise SchemaError(f"{coa_id}: COA body must be an object")
        for key in _BODY_KEYS:
            if key not in body:
                raise SchemaError(f"{coa_id}: missing {key!r}")
        name, overview = body["name"], body["overview"]
        if not isinstance(name, str) or not name.strip():
            raise SchemaError(f"{coa_id}: name must be a non-empty string")
        if not isinstance(overview, str) or not overview.strip():
            raise SchemaError(f"{coa_id}: overview must be a non-empty string")
        rows = body["task_allocation"]
        if not isinstance(rows, list):
            raise SchemaError(f"{coa_id}: task_allocation must be an array")
        warnings: list[str] = []
        allocations = [_parse_allocation(coa_id, row, warnings) for row in rows]
        extra = {k: v for k, v in body.items() if k not in _BODY_KEYS}
        coa = CourseOfAction(str(coa_id), name, overview, allocations, extra, warnings)
        if scenario is not None:
            coa = resolve_targets(coa, scenario)
        coas.append(coa)
    return coas


def resolve_targets(coa: CourseOfAction, scenario: Scenario) -> CourseOfAction:
    """Back-fill pending engage-target coordinates from scenario positions."""
    changed = False
    allocations = []
    for a in coa.task_allocation:
        cmd = a.command
        if isinstance(cmd, EngageTarget) and cmd.target is None:
            target = scenario.unit_by_id(cmd.target_unit_id)
            if target is not None:
                cmd = replace(cmd, target=target.position)
                a = TaskAllocation(a.unit_id, a.unit_type, a.alliance, a.position, cmd, a.extra)
                changed = True
        allocations.append(a)
    if not changed:
        return coa
    return CourseOfAction(coa.coa_id, coa.name, coa.overview, allocations, coa.extra, coa.warnings)


# -- validation -------------------------------------------------------------------

def validate_coa(coa: CourseOfAction, scenario: Scenario) -> ValidationReport:
    """Check a COA against a scenario, reporting every violation found.

    Codes: MissingCommand, UnknownUnit, CommandedHostile, DuplicateAllocation,
    EngageNonHostile, TargetOutOfBounds.
    """
    violations: list[Violation] = []
    by_id = {u.unit_id: u for u in scenario.units}
    hostile_ids = {u.unit_id for u in scenario.hostile_units()}

    allocated: set[int] = set()
    for a in coa.task_allocation:
        if a.unit_id in allocated:
            violations.append(
                Violation("DuplicateAllocation", f"unit {a.unit_id} allocated more than once", a.unit_id)
            )
        allocated.add(a.unit_id)

        unit = by_id.get(a.unit_id)
        if unit is None:
            violations.append(
                Violation("UnknownUnit", f"unit {a.unit_id} is not in the scenario", a.unit_id)
            )
        elif unit.alliance is Alliance.HOSTILE:
            violations.append(
                Violation("CommandedHostile", f"unit {a.unit_id} is hostile and cannot be commanded", a.unit_id)
            )

        cmd = a.command
        if isinstance(cmd, EngageTarget) and cmd.target_unit_id not in hostile_ids:
            violations.append(
                Violation(
                    "EngageNonHostile",
                    f"unit {a.unit_id} engages {cmd.target_unit_id}, which is not a hostile unit",
                    a.unit_id,
                )
            )
        if cmd.target is not None and not scenario.terrain.in_bounds(cmd.target):
            violations.append(
                Violation(
                    "TargetOutOfBounds",
                    f"unit {a.unit_id} target ({cmd.target.x}, {cmd.target.y}) is outside the map",
                    a.unit_id,
                )
            )

    for u in scenario.friendly_units():
        if u.unit_id not in allocated:
            violations.append(
                Violation("MissingCommand", f"friendly unit {u.unit_id} has no command", u.unit_id)
            )

    return ValidationReport(valid=not violations, violations=violations)


# -- canonical serialization -------------------------------------------------------

def _allocation_body(a: TaskAllocation) -> dict:
    body = {
        "unit_id": a.unit_id,
        "unit_type": a.unit_type.value,
        "alliance": a.alliance.value,
        "position": {"x": float(a.position.x), "y": float(a.position.y)},
        "command": command_to_text(a.command),
    }
    for k in sorted(a.extra):
        body[k] = a.extra[k]
    return body


def _coa_body(coa: CourseOfAction) -> dict:
    body = {
        "overview": coa.overview,
        "name": coa.name,
        "task_allocation": [_allocation_body(a) for a in coa.task_allocation],
    }
    for k in sorted(coa.extra):
        body[k] = coa.extra[k]
    return body


def coas_to_canonical_json(coas: list[CourseOfAction]) -> str:
    """Stable serialization of a COA set as one JSON object keyed by coa_id."""
    return json.dumps({c.coa_id: _coa_body(c) for c in coas}, indent=2)


def coa_to_canonical_json(coa: CourseOfAction) -> str:
    return coas_to_canonical_json([coa])
