"""Text renderings of an environment (narrative, structured, json) and the structured parser."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any

from .grid import AgentState, Direction, DoorState, Layout, WorldObject, WorldState, reading_order

STYLES = ("narrative", "structured", "json")

_INTRO = (
    "Rooms are separated by walls and might contain objects such as keys, balls, and boxes of different colors. "
    "Some walls, connecting two adjacent rooms, have doors. "
    "Some doors are unlocked, whereas others need to be unlocked with keys of the same color. "
    "The agent can perform 6 actions:"
)
_GRID_WORLD = (
    "An agent is in a grid world consisting of one or more rooms. "
    "All rooms in the same grid world are squares of identical size and are organized in a square grid layout. "
)
ACTION_HELP = (
    ("left", "turn left"),
    ("right", "turn right"),
    ("forward", "move forward"),
    ("pickup", "pickup an object"),
    ("drop", "drop an object"),
    ("toggle", "open/close a door or a box"),
)
_RULES = (
    "Only the forward action changes the agent's position in the grid world. "
    "Turning left or right changes the agent's orientation only but not the position. "
    "The agent cannot move into a cell that is already occupied by an object, "
    "even if the object is one it is trying to interact with. "
    "Using a coordinate system where the (0, 0) position is the top-left corner of the grid world, "
    "necessarily corresponding to a wall, the coordinates follow the format (x, y), "
    "with x denoting the horizontal position in the grid and y denoting the vertical position in the grid"
)
_SPECIFICS = "These are the specifics regarding this environment:"


def _inline_actions() -> str:
    parts = [f"{a} ({h})" for a, h in ACTION_HELP]
    return ", ".join(parts[:-1]) + ", and " + parts[-1] + "."


@dataclass(frozen=True)
class FormatOptions:
    # emit the open/closed state of doors (not part of the reference layout)
    show_open: bool = False


PAPER_EXACT = FormatOptions()


def _xy(p) -> str:
    return f"({p[0]}, {p[1]})"


def _mission_sentence(mission: str) -> str:
    return f"'{mission}.'" if mission else "''"


def format_structured(state: WorldState, mission: str, opts: FormatOptions = PAPER_EXACT) -> str:
    lay = state.layout
    a = state.agent
    inner = lay.room_size - 2
    lines = [_GRID_WORLD + _INTRO]
    n = len(ACTION_HELP)
    for i, (act, helptext) in enumerate(ACTION_HELP):
        lines.append(f"- {act} ({helptext}){'.' if i == n - 1 else ','}")
    lines.append(_RULES + ".")
    lines.append("")
    lines.append(_SPECIFICS)
    lines.append(f"- Number of rooms: {lay.num_cols}x{lay.num_rows}")
    lines.append(f"- Size of each room (including walls): {lay.room_size}x{lay.room_size}")
    lines.append(f"- Effective room size (excluding walls): {inner}x{inner}")
    lines.append(f"- Total grid size: {lay.width}x{lay.height}")
    lines.append(f"- Agent initial position: {_xy(a.pos)}")
    lines.append(f"- Agent facing direction: {a.direction.label} (toward {_xy(a.front)})")
    lines.append("- Objects in environment:")
    for o in sorted(state.objects, key=reading_order):
        line = f"  - {o.kind}, color={o.color}, position={_xy(o.pos)}"
        if o.is_door:
            line += f", locked={o.is_locked}"
            if opts.show_open:
                line += f", open={o.is_open}"
        lines.append(line)
    lines.append(f"- Mission: {_mission_sentence(mission)}")
    return "\n".join(lines) + "\n"


def _narrative_object(o: WorldObject, opts: FormatOptions) -> str:
    if o.is_door:
        lock = "locked" if o.is_locked else "unlocked"
        article = "a" if o.is_locked else "an"
        state = ""
        if opts.show_open:
            state = " open" if o.is_open else " closed"
        return f"{article} {lock}{state} {o.color} door at position {_xy(o.pos)}"
    return f"a {o.color} {o.kind} at position {_xy(o.pos)}"


def format_narrative(state: WorldState, mission: str, opts: FormatOptions = PAPER_EXACT) -> str:
    lay = state.layout
    a = state.agent
    inner = lay.room_size - 2
    head = (
        f"An agent in a grid world made of {lay.num_cols}x{lay.num_rows} rooms, "
        f"each of size {lay.room_size}x{lay.room_size}, including the surrounding walls, "
        f"meaning that effectively, each room is of size {inner}x{inner}. "
        f"The total grid size is thus {lay.width}x{lay.height}. "
    )
    pose = (
        f", and the agent is initially placed at {_xy(a.pos)}, "
        f"and is facing, {a.direction.label}, the {_xy(a.front)} position."
    )
    items = [_narrative_object(o, opts) for o in sorted(state.objects, key=reading_order)]
    if not items:
        objects = " There are no objects in the grid world."
    elif len(items) == 1:
        objects = f" There is {items[0]}."
    elif len(items) == 2:
        objects = f" There is {items[0]} and {items[1]}."
    else:
        objects = " There is " + ", ".join(items[:-1]) + ", and " + items[-1] + "."
    return (
        head
        + _INTRO
        + " "
        + _inline_actions()
        + " "
        + _RULES
        + pose
        + objects
        + f" The agent's mission is {_mission_sentence(mission)}"
    )


def _json_object(o: WorldObject, opts: FormatOptions) -> str:
    d: dict[str, Any] = {"type": o.kind, "color": o.color, "position": [o.pos[0], o.pos[1]]}  # type: ignore[index]
    if o.is_door:
        d["locked"] = o.is_locked
        if opts.show_open:
            d["open"] = o.is_open
    return json.dumps(d)


def format_json(state: WorldState, mission: str, opts: FormatOptions = PAPER_EXACT) -> str:
    lay = state.layout
    a = state.agent
    inner = lay.room_size - 2
    context = _GRID_WORLD + _INTRO + " " + _inline_actions() + " " + _RULES + ",\n\n" + _SPECIFICS + " \n\n"

    def pair(x: int, y: int) -> str:
        return f"[{x}, {y}]"

    objs = [_json_object(o, opts) for o in sorted(state.objects, key=reading_order)]
    lines = [
        "{",
        f'  "context": {json.dumps(context)},',
        '  "config": {',
        f'    "num_rooms": {pair(lay.num_cols, lay.num_rows)},',
        f'    "room_size_incl_walls": {pair(lay.room_size, lay.room_size)},',
        f'    "room_size_excl_walls": {pair(inner, inner)},',
        f'    "grid_size": {pair(lay.width, lay.height)},',
        f'    "agent_initial_pos": {pair(*a.pos)},',
        f'    "agent_front_pos": {pair(*a.front)},',
        '    "agent_direction": {',
        f'      "index": {int(a.direction)},',
        f'      "name": "{a.direction.label}"',
        "    },",
    ]
    if objs:
        lines.append('    "objects": [')
        lines.extend(f"      {o}," for o in objs[:-1])
        lines.append(f"      {objs[-1]}")
        lines.append("    ],")
    else:
        lines.append('    "objects": [],')
    lines.append(f'    "mission": {json.dumps(mission)}')
    lines.append("  }")
    lines.append("}")
    return "\n".join(lines)


def format_env(state: WorldState, mission: str, style: str = "structured", opts: FormatOptions = PAPER_EXACT) -> str:
    if style == "structured":
        return format_structured(state, mission, opts)
    if style == "narrative":
        return format_narrative(state, mission, opts)
    if style == "json":
        return format_json(state, mission, opts)
    raise ValueError(f"unknown style {style!r}; expected one of {STYLES}")


def format(instance: Any, style: str = "structured", opts: FormatOptions = PAPER_EXACT) -> str:  # noqa: A001
    """Render an EnvInstance (anything with .state and .mission)."""
    return format_env(instance.state, instance.mission.surface, style, opts)


# --- structured parser -------------------------------------------------------


class FormatParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class ParsedEnv:
    state: WorldState
    mission: str


_NUM2 = r"(\d+)x(\d+)"
_POS = r"\((\d+), (\d+)\)"
_FIELDS = {
    "rooms": re.compile(rf"^- Number of rooms: {_NUM2}$"),
    "room": re.compile(rf"^- Size of each room \(including walls\): {_NUM2}$"),
    "inner": re.compile(rf"^- Effective room size \(excluding walls\): {_NUM2}$"),
    "grid": re.compile(rf"^- Total grid size: {_NUM2}$"),
    "pos": re.compile(rf"^- Agent initial position: {_POS}$"),
    "dir": re.compile(rf"^- Agent facing direction: (east|south|west|north) \(toward {_POS}\)$"),
}
_OBJ = re.compile(
    rf"^  - (key|ball|box|door), color=(\w+), position={_POS}(?:, locked=(True|False))?(?:, open=(True|False))?$"
)
_MISSION = re.compile(r"^- Mission: '(.*)'$")


def parse_structured(text: str) -> ParsedEnv:
    lines = text.split("\n")
    try:
        start = lines.index(_SPECIFICS)
    except ValueError:
        raise FormatParseError(1, "missing environment specifics header") from None
    vals: dict[str, tuple[str, ...]] = {}
    order = ["rooms", "room", "inner", "grid", "pos", "dir"]
    i = start + 1
    for key in order:
        if i >= len(lines):
            raise FormatParseError(i + 1, f"unexpected end of text, wanted {key}")
        m = _FIELDS[key].match(lines[i])
        if m is None:
            raise FormatParseError(i + 1, f"malformed field line: {lines[i]!r}")
        vals[key] = m.groups()
        i += 1
    if i >= len(lines) or lines[i] != "- Objects in environment:":
        raise FormatParseError(i + 1, "missing object list header")
    i += 1
    objects = []
    while i < len(lines) and lines[i].startswith("  - "):
        m = _OBJ.match(lines[i])
        if m is None:
            raise FormatParseError(i + 1, f"malformed object line: {lines[i]!r}")
        kind, color, x, y, locked, opened = m.groups()
        door_state = None
        if kind == "door":
            if locked is None:
                raise FormatParseError(i + 1, "door without lock flag")
            if locked == "True":
                door_state = DoorState.LOCKED
            else:
                door_state = DoorState.OPEN if opened == "True" else DoorState.CLOSED
        try:
            objects.append(WorldObject(kind, color, (int(x), int(y)), door_state))
        except ValueError as exc:
            raise FormatParseError(i + 1, str(exc)) from None
        i += 1
    if i >= len(lines):
        raise FormatParseError(i + 1, "missing mission line")
    m = _MISSION.match(lines[i])
    if m is None:
        raise FormatParseError(i + 1, f"malformed mission line: {lines[i]!r}")
    mission = m.group(1)
    if mission.endswith("."):
        mission = mission[:-1]

    cols, rows = map(int, vals["rooms"])
    size = int(vals["room"][0])
    try:
        layout = Layout(cols, rows, size)
    except ValueError as exc:
        raise FormatParseError(start + 2, str(exc)) from None
    if (layout.width, layout.height) != tuple(map(int, vals["grid"])):
        raise FormatParseError(start + 5, "grid size inconsistent with room layout")
    direction = Direction[vals["dir"][0].upper()]
    agent = AgentState((int(vals["pos"][0]), int(vals["pos"][1])), direction)
    if agent.front != (int(vals["dir"][1]), int(vals["dir"][2])):
        raise FormatParseError(start + 7, "front cell inconsistent with position and direction")
    objects.sort(key=reading_order)
    objects = [WorldObject(o.kind, o.color, o.pos, o.door_state, idx) for idx, o in enumerate(objects)]
    return ParsedEnv(WorldState(layout, tuple(objects), agent), mission)
