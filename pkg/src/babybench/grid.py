"""Deterministic world model: layout, objects, agent pose and the transition function."""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Any, Iterable, Optional

import numpy as np

Coord = tuple[int, int]

COLORS = ("red", "green", "blue", "purple", "yellow", "grey")
KINDS = ("key", "ball", "box", "door")
PORTABLE = ("key", "ball", "box")


class Direction(enum.IntEnum):
    EAST = 0
    SOUTH = 1
    WEST = 2
    NORTH = 3

    @property
    def vec(self) -> Coord:
        return DIR_VECS[self]

    @property
    def label(self) -> str:
        return self.name.lower()

    def left(self) -> "Direction":
        return Direction((self + 3) % 4)

    def right(self) -> "Direction":
        return Direction((self + 1) % 4)


DIR_VECS: tuple[Coord, ...] = ((1, 0), (0, 1), (-1, 0), (0, -1))


class Action(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    FORWARD = "forward"
    PICKUP = "pickup"
    DROP = "drop"
    TOGGLE = "toggle"

    def __str__(self) -> str:
        return self.value


class DoorState(str, enum.Enum):
    OPEN = "open"
    CLOSED = "closed_unlocked"
    LOCKED = "closed_locked"


@dataclass(frozen=True)
class WorldObject:
    kind: str
    color: str
    pos: Optional[Coord]
    door_state: Optional[DoorState] = None
    oid: int = -1

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown object kind {self.kind!r}")
        if self.color not in COLORS:
            raise ValueError(f"unknown color {self.color!r}")
        if (self.kind == "door") != (self.door_state is not None):
            raise ValueError("door_state is required for doors and forbidden otherwise")

    @property
    def is_door(self) -> bool:
        return self.kind == "door"

    @property
    def is_open(self) -> bool:
        return self.door_state is DoorState.OPEN

    @property
    def is_locked(self) -> bool:
        return self.door_state is DoorState.LOCKED

    @property
    def portable(self) -> bool:
        return self.kind in PORTABLE

    def moved(self, pos: Optional[Coord]) -> "WorldObject":
        return dataclasses.replace(self, pos=pos)


@dataclass(frozen=True)
class AgentState:
    pos: Coord
    direction: Direction
    carrying: Optional[WorldObject] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(self, "pos", (int(self.pos[0]), int(self.pos[1])))

    @property
    def front(self) -> Coord:
        dx, dy = DIR_VECS[self.direction]
        return (self.pos[0] + dx, self.pos[1] + dy)


@dataclass(frozen=True)
class Layout:
    """A square-ish grid of rooms sharing their walls."""

    num_cols: int
    num_rows: int
    room_size: int

    def __post_init__(self) -> None:
        if self.room_size < 3 or self.num_cols < 1 or self.num_rows < 1:
            raise ValueError(f"invalid layout {self}")

    @property
    def width(self) -> int:
        return self.num_cols * (self.room_size - 1) + 1

    @property
    def height(self) -> int:
        return self.num_rows * (self.room_size - 1) + 1

    @property
    def walls(self) -> np.ndarray:
        """Read-only (height, width) bool mask.  Door cells are wall cells holding a door."""
        return _wall_mask(self.num_cols, self.num_rows, self.room_size)

    def in_grid(self, pos: Coord) -> bool:
        return 0 <= pos[0] < self.width and 0 <= pos[1] < self.height

    def is_wall(self, pos: Coord) -> bool:
        return bool(self.walls[pos[1], pos[0]])

    def room_of(self, pos: Coord) -> tuple[int, int]:
        """Room indices (col, row) containing an interior cell (wall cells map to the room below/right)."""
        step = self.room_size - 1
        return (min(pos[0] // step, self.num_cols - 1), min(pos[1] // step, self.num_rows - 1))

    def room_bounds(self, col: int, row: int) -> tuple[int, int, int, int]:
        """(x0, y0, x1, y1) of a room including its walls, inclusive."""
        step = self.room_size - 1
        return (col * step, row * step, col * step + step, row * step + step)

    def in_room(self, pos: Coord, col: int, row: int) -> bool:
        x0, y0, x1, y1 = self.room_bounds(col, row)
        return x0 <= pos[0] <= x1 and y0 <= pos[1] <= y1

    def room_interior(self, col: int, row: int) -> list[Coord]:
        x0, y0, x1, y1 = self.room_bounds(col, row)
        return [(x, y) for y in range(y0 + 1, y1) for x in range(x0 + 1, x1)]


@lru_cache(maxsize=64)
def _wall_mask(num_cols: int, num_rows: int, room_size: int) -> np.ndarray:
    step = room_size - 1
    w = num_cols * step + 1
    h = num_rows * step + 1
    mask = np.zeros((h, w), dtype=bool)
    mask[:: step, :] = True
    mask[:, :: step] = True
    mask.setflags(write=False)
    return mask


def reading_order(obj: WorldObject) -> tuple[int, int]:
    assert obj.pos is not None
    return (obj.pos[1], obj.pos[0])


@dataclass(frozen=True)
class WorldState:
    layout: Layout
    objects: tuple[WorldObject, ...]
    agent: AgentState
    step_count: int = 0
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        objs = tuple(sorted(self.objects, key=reading_order))
        object.__setattr__(self, "objects", objs)
        object.__setattr__(self, "_index", {o.pos: o for o in objs})

    @property
    def width(self) -> int:
        return self.layout.width

    @property
    def height(self) -> int:
        return self.layout.height

    def object_at(self, pos: Coord) -> Optional[WorldObject]:
        return self._index.get(pos)

    def object_by_id(self, oid: int) -> Optional[WorldObject]:
        for o in self.objects:
            if o.oid == oid:
                return o
        carried = self.agent.carrying
        if carried is not None and carried.oid == oid:
            return carried
        return None

    def is_free(self, pos: Coord) -> bool:
        """Empty floor: inside the grid, not a wall, no object."""
        return self.layout.in_grid(pos) and not self.layout.is_wall(pos) and pos not in self._index

    def is_passable(self, pos: Coord) -> bool:
        if not self.layout.in_grid(pos):
            return False
        obj = self._index.get(pos)
        if obj is not None:
            return obj.is_open
        return not self.layout.is_wall(pos)

    @cached_property
    def inventory(self) -> tuple[tuple[str, str], ...]:
        """Sorted multiset of (kind, color) over grid and hand."""
        items = [(o.kind, o.color) for o in self.objects]
        if self.agent.carrying is not None:
            items.append((self.agent.carrying.kind, self.agent.carrying.color))
        return tuple(sorted(items))

    def validate(self) -> None:
        """Raise ValueError if any structural invariant is broken."""
        lay = self.layout
        seen = set()
        for o in self.objects:
            if o.pos is None or not lay.in_grid(o.pos):
                raise ValueError(f"object off grid: {o}")
            if o.pos in seen:
                raise ValueError(f"two objects at {o.pos}")
            seen.add(o.pos)
            on_wall = lay.is_wall(o.pos)
            if o.is_door != on_wall:
                raise ValueError(f"doors must sit in walls and nothing else may: {o}")
        a = self.agent
        if not lay.in_grid(a.pos) or (lay.is_wall(a.pos) and not self.is_passable(a.pos)):
            raise ValueError(f"agent in a wall at {a.pos}")
        occupant = self.object_at(a.pos)
        if occupant is not None and not occupant.is_open:
            raise ValueError(f"agent overlaps {occupant}")


def front_cell(state: WorldState) -> Optional[Coord]:
    """Cell in front of the agent, or None when it falls outside the grid."""
    pos = state.agent.front
    return pos if state.layout.in_grid(pos) else None


def is_adjacent(a: Coord, b: Coord) -> bool:
    return abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


def _with_objects(state: WorldState, objects: Iterable[WorldObject], agent: AgentState) -> WorldState:
    return WorldState(state.layout, tuple(objects), agent, state.step_count + 1)


def transition(state: WorldState, action: Action | str) -> tuple[WorldState, bool]:
    """Apply one action.  Returns (successor, had_effect); illegal actions only advance step_count."""
    act = Action(action)
    agent = state.agent
    noop = dataclasses.replace(state, step_count=state.step_count + 1)

    if act is Action.LEFT:
        return dataclasses.replace(noop, agent=dataclasses.replace(agent, direction=agent.direction.left())), True
    if act is Action.RIGHT:
        return dataclasses.replace(noop, agent=dataclasses.replace(agent, direction=agent.direction.right())), True

    fpos = front_cell(state)
    if fpos is None:
        return noop, False
    fobj = state.object_at(fpos)

    if act is Action.FORWARD:
        if state.is_passable(fpos):
            return dataclasses.replace(noop, agent=dataclasses.replace(agent, pos=fpos)), True
        return noop, False

    if act is Action.PICKUP:
        if agent.carrying is not None or fobj is None or not fobj.portable:
            return noop, False
        rest = [o for o in state.objects if o is not fobj]
        return _with_objects(state, rest, dataclasses.replace(agent, carrying=fobj.moved(None))), True

    if act is Action.DROP:
        if agent.carrying is None or not state.is_free(fpos):
            return noop, False
        dropped = agent.carrying.moved(fpos)
        return _with_objects(state, (*state.objects, dropped), dataclasses.replace(agent, carrying=None)), True

    # toggle
    if fobj is None:
        return noop, False
    if fobj.kind == "box":
        rest = [o for o in state.objects if o is not fobj]
        return _with_objects(state, rest, agent), True
    if not fobj.is_door:
        return noop, False
    if fobj.is_locked:
        key = agent.carrying
        if key is None or key.kind != "key" or key.color != fobj.color:
            return noop, False
        new_door = dataclasses.replace(fobj, door_state=DoorState.OPEN)
    elif fobj.is_open:
        new_door = dataclasses.replace(fobj, door_state=DoorState.CLOSED)
    else:
        new_door = dataclasses.replace(fobj, door_state=DoorState.OPEN)
    rest = [new_door if o is fobj else o for o in state.objects]
    return _with_objects(state, rest, agent), True


def step(state: WorldState, action: Action | str) -> WorldState:
    return transition(state, action)[0]


def replay(state: WorldState, actions: Iterable[Action | str]) -> list[WorldState]:
    """All states visited, starting with `state`."""
    out = [state]
    for a in actions:
        state = step(state, a)
        out.append(state)
    return out


# --- canonical JSON encoding -------------------------------------------------


def object_to_json(o: WorldObject) -> dict[str, Any]:
    d: dict[str, Any] = {"id": o.oid, "type": o.kind, "color": o.color}
    d["position"] = None if o.pos is None else [o.pos[0], o.pos[1]]
    if o.is_door:
        d["state"] = o.door_state.value  # type: ignore[union-attr]
    return d


def object_from_json(d: dict[str, Any]) -> WorldObject:
    pos = d.get("position")
    state = d.get("state")
    return WorldObject(
        kind=d["type"],
        color=d["color"],
        pos=None if pos is None else (int(pos[0]), int(pos[1])),
        door_state=None if state is None else DoorState(state),
        oid=int(d.get("id", -1)),
    )


def pose_to_json(agent: AgentState) -> dict[str, Any]:
    return {"position": [agent.pos[0], agent.pos[1]], "direction": int(agent.direction)}


def state_to_json(state: WorldState) -> dict[str, Any]:
    lay = state.layout
    agent = pose_to_json(state.agent)
    agent["carrying"] = None if state.agent.carrying is None else object_to_json(state.agent.carrying)
    return {
        "layout": {"num_cols": lay.num_cols, "num_rows": lay.num_rows, "room_size": lay.room_size},
        "objects": [object_to_json(o) for o in state.objects],
        "agent": agent,
        "step_count": state.step_count,
    }


def state_from_json(d: dict[str, Any]) -> WorldState:
    lay = Layout(**d["layout"])
    a = d["agent"]
    carrying = a.get("carrying")
    agent = AgentState(
        pos=tuple(a["position"]),  # type: ignore[arg-type]
        direction=Direction(a["direction"]),
        carrying=None if carrying is None else object_from_json(carrying),
    )
    objs = tuple(object_from_json(o) for o in d["objects"])
    return WorldState(lay, objs, agent, int(d.get("step_count", 0)))
