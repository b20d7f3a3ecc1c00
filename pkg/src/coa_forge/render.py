"""Common operational picture rendering.

render_cop produces the PNG handed to vision models: a schematic terrain
raster (river band, bridge corridors, objective ring) with one marker per
living unit. render_coa_overlay produces an SVG for human review: movement
arrows in blue, engagement arrows in red, plus the COA's name and overview.

Both renderers are pure functions of their inputs; bytes are stable across
runs. The map-to-pixel transform is affine with the y axis flipped (map y
grows north, pixel y grows down).
"""
from __future__ import annotations

import io
from dataclasses import dataclass

from PIL import Image, ImageDraw

from .coa import AttackMove, CourseOfAction, EngageTarget, validate_coa
from .errors import InvalidCoa, InvariantViolation
from .scenario import Alliance, Point, Scenario, Unit, UnitType


@dataclass(frozen=True)
class RenderStyle:
    scale: float = 3.0                 # pixels per map unit
    friendly_color: str = "#1f5fbf"
    hostile_color: str = "#c23b22"
    move_color: str = "#1f5fbf"
    engage_color: str = "#c23b22"
    ground_color: str = "#e8e4d4"
    water_color: str = "#9db8d2"
    bridge_color: str = "#c9b896"
    objective_color: str = "#b8860b"
    marker_px: float = 6.0

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise InvariantViolation(f"scale must be positive, got {self.scale}")
        if self.friendly_color == self.hostile_color:
            raise InvariantViolation("friendly and hostile palettes must be distinguishable")


@dataclass(frozen=True)
class CanvasMap:
    """Affine map between map coordinates and pixel coordinates."""

    scale: float
    map_height: float

    def to_px(self, p: Point) -> tuple[float, float]:
        return (p.x * self.scale, (self.map_height - p.y) * self.scale)

    def to_map(self, px: float, py: float) -> Point:
        return Point(px / self.scale, self.map_height - py / self.scale)


def canvas_map(scenario: Scenario, style: RenderStyle) -> CanvasMap:
    return CanvasMap(scale=style.scale, map_height=scenario.terrain.height)


# marker glyph per unit type; anything unlisted draws as a circle
_GLYPHS = {
    UnitType.ARMOR: "square",
    UnitType.AVIATION: "triangle",
    UnitType.ARTILLERY: "cross",
    UnitType.MORTAR: "cross",
    UnitType.RECONNAISSANCE: "diamond",
}


def render_cop(scenario: Scenario, style: RenderStyle | None = None) -> bytes:
    """PNG raster of the scenario: schematic terrain plus living-unit markers."""
    style = style or RenderStyle()
    cmap = canvas_map(scenario, style)
    terrain = scenario.terrain
    width_px = round(terrain.width * style.scale)
    height_px = round(terrain.height * style.scale)
    image = Image.new("RGB", (width_px, height_px), style.ground_color)
    draw = ImageDraw.Draw(image)

    river_left, _ = cmap.to_px(Point(terrain.river.x_min, 0))
    river_right, _ = cmap.to_px(Point(terrain.river.x_max, 0))
    draw.rectangle([river_left, 0, river_right, height_px], fill=style.water_color)
    for bridge in terrain.bridges:
        x0, y0 = cmap.to_px(Point(bridge.corridor.x_min, bridge.corridor.y_max))
        x1, y1 = cmap.to_px(Point(bridge.corridor.x_max, bridge.corridor.y_min))
        draw.rectangle([x0, y0, x1, y1], fill=style.bridge_color)
    ox, oy = cmap.to_px(scenario.terrain.objective.center)
    r = scenario.terrain.objective.radius * style.scale
    draw.ellipse([ox - r, oy - r, ox + r, oy + r], outline=style.objective_color, width=3)

    for unit in scenario.units:
        if unit.alive:
            _draw_marker(draw, cmap, unit, style)

    buf = io.BytesIO()
    image.save(buf, format="PNG")
    return buf.getvalue()


def _draw_marker(draw: ImageDraw.ImageDraw, cmap: CanvasMap, unit: Unit, style: RenderStyle) -> None:
    color = style.friendly_color if unit.alliance is Alliance.FRIENDLY else style.hostile_color
    x, y = cmap.to_px(unit.position)
    r = style.marker_px
    glyph = _GLYPHS.get(unit.unit_type, "circle")
    if glyph == "square":
        draw.rectangle([x - r, y - r, x + r, y + r], fill=color)
    elif glyph == "triangle":
        draw.polygon([(x, y - r), (x - r, y + r), (x + r, y + r)], fill=color)
    elif glyph == "diamond":
        draw.polygon([(x, y - r), (x + r, y), (x, y + r), (x - r, y)], fill=color)
    elif glyph == "cross":
        w = r / 2.5
        draw.rectangle([x - r, y - w, x + r, y + w], fill=color)
        draw.rectangle([x - w, y - r, x + w, y + r], fill=color)
    else:
        draw.ellipse([x - r, y - r, x + r, y + r], fill=color)


def render_coa_overlay(scenario: Scenario, coa: CourseOfAction, style: RenderStyle | None = None) -> str:
    """SVG of the COA over the schematic map.

    One arrow per task allocation: blue for movement orders, red for
    engagement orders (pointing at the target unit's location)."""
    style = style or RenderStyle()
    report = validate_coa(coa, scenario)
    if not report.valid:
        raise InvalidCoa(
            f"COA {coa.coa_id} fails validation with {len(report.violations)} violation(s): "
            + "; ".join(v.message for v in report.violations[:5]),
            violations=report.violations,
        )
    cmap = canvas_map(scenario, style)
    terrain = scenario.terrain
    width_px = round(terrain.width * style.scale)
    height_px = round(terrain.height * style.scale)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width_px}" height="{height_px}" '
        f'viewBox="0 0 {width_px} {height_px}">',
        f"<title>{_esc(coa.name)}</title>",
        "<defs>"
        f'<marker id="head-move" markerWidth="10" markerHeight="8" refX="9" refY="4" orient="auto">'
        f'<path d="M0,0 L10,4 L0,8 z" fill="{style.move_color}"/></marker>'
        f'<marker id="head-engage" markerWidth="10" markerHeight="8" refX="9" refY="4" orient="auto">'
        f'<path d="M0,0 L10,4 L0,8 z" fill="{style.engage_color}"/></marker>'
        "</defs>",
        f'<rect width="{width_px}" height="{height_px}" fill="{style.ground_color}"/>',
    ]
    river_left, _ = cmap.to_px(Point(terrain.river.x_min, 0))
    river_right, _ = cmap.to_px(Point(terrain.river.x_max, 0))
    parts.append(
        f'<rect class="river" x="{river_left:.1f}" y="0" width="{river_right - river_left:.1f}" '
        f'height="{height_px}" fill="{style.water_color}"/>'
    )
    for bridge in terrain.bridges:
        x0, y0 = cmap.to_px(Point(bridge.corridor.x_min, bridge.corridor.y_max))
        x1, y1 = cmap.to_px(Point(bridge.corridor.x_max, bridge.corridor.y_min))
        parts.append(
            f'<rect class="bridge" x="{x0:.1f}" y="{y0:.1f}" width="{x1 - x0:.1f}" '
            f'height="{y1 - y0:.1f}" fill="{style.bridge_color}"/>'
        )
    ox, oy = cmap.to_px(terrain.objective.center)
    parts.append(
        f'<circle class="objective" cx="{ox:.1f}" cy="{oy:.1f}" '
        f'r="{terrain.objective.radius * style.scale:.1f}" fill="none" '
        f'stroke="{style.objective_color}" stroke-width="3"/>'
    )
    for unit in scenario.units:
        if not unit.alive:
            continue
        color = style.friendly_color if unit.alliance is Alliance.FRIENDLY else style.hostile_color
        ux, uy = cmap.to_px(unit.position)
        parts.append(f'<circle class="unit" cx="{ux:.1f}" cy="{uy:.1f}" r="4" fill="{color}"/>')

    for allocation in coa.task_allocation:
        cmd = allocation.command
        x0, y0 = cmap.to_px(allocation.position)
        if isinstance(cmd, AttackMove):
            end, css, marker = cmd.target, "arrow arrow-move", "head-move"
            color = style.move_color
        else:
            end = cmd.target
            if end is None:
                target_unit = scenario.unit_by_id(cmd.target_unit_id)
                end = target_unit.position
            css, marker, color = "arrow arrow-engage", "head-engage", style.engage_color
        x1, y1 = cmap.to_px(end)
        parts.append(
            f'<line class="{css}" x1="{x0:.1f}" y1="{y0:.1f}" x2="{x1:.1f}" y2="{y1:.1f}" '
            f'stroke="{color}" stroke-width="2.5" marker-end="url(#{marker})"/>'
        )

    parts.append(
        f'<g class="title-block"><text class="coa-name" x="12" y="26" font-size="20" '
        f'font-weight="bold" fill="#222222">{_esc(coa.name)}</text>'
        f'<text class="coa-overview" x="12" y="46" font-size="12" '
        f'fill="#333333">{_esc(coa.overview)}</text></g>'
    )
    parts.append("</svg>")
    return "\n".join(parts)


def _esc(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )
