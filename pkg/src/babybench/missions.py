"""Instruction grammar: structure, surface strings, parsing and success tracking."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from .grid import COLORS, DIR_VECS, KINDS, WorldObject, WorldState, is_adjacent

LOCATIONS = ("in_front_of_you", "behind_you", "on_your_left", "on_your_right")
_LOC_TEXT = {
    "in_front_of_you": "in front of you",
    "behind_you": "behind you",
    "on_your_left": "on your left",
    "on_your_right": "on your right",
}
_TEXT_LOC = {v: k for k, v in _LOC_TEXT.items()}


class IllPosedMission(ValueError):
    """A descriptor matches no object in the initial state."""


class MissionParseError(ValueError):
    pass


@dataclass(frozen=True)
class ObjectDesc:
    kind: str
    color: Optional[str] = None
    loc: Optional[str] = None
    # "the" when exactly one object matched at authoring time, else "a"; ignored for matching
    definite: bool = False

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.color is not None and self.color not in COLORS:
            raise ValueError(f"unknown color {self.color!r}")
        if self.loc is not None and self.loc not in LOCATIONS:
            raise ValueError(f"unknown location {self.loc!r}")

    def render(self) -> str:
        words = ["the" if self.definite else "a"]
        if self.color:
            words.append(self.color)
        words.append(self.kind)
        if self.loc:
            words.append(_LOC_TEXT[self.loc])
        return " ".join(words)

    def matches(self, obj: WorldObject) -> bool:
        return obj.kind == self.kind and (self.color is None or obj.color == self.color)


@dataclass(frozen=True)
class GoTo:
    desc: ObjectDesc

    def render(self) -> str:
        return f"go to {self.desc.render()}"


@dataclass(frozen=True)
class Open:
    desc: ObjectDesc

    def render(self) -> str:
        return f"open {self.desc.render()}"


@dataclass(frozen=True)
class Pickup:
    desc: ObjectDesc

    def render(self) -> str:
        return f"pick up {self.desc.render()}"


@dataclass(frozen=True)
class PutNext:
    move: ObjectDesc
    fixed: ObjectDesc

    def render(self) -> str:
        return f"put {self.move.render()} next to {self.fixed.render()}"


Clause = Union[GoTo, Open, Pickup, PutNext]


@dataclass(frozen=True)
class And:
    a: "Node"
    b: "Node"

    def render(self) -> str:
        return f"{self.a.render()} and {self.b.render()}"


@dataclass(frozen=True)
class Then:
    """a, then b."""

    a: "Node"
    b: "Node"

    def render(self) -> str:
        return f"{self.a.render()}, then {self.b.render()}"


@dataclass(frozen=True)
class After:
    """a after you b: b must be completed first."""

    a: "Node"
    b: "Node"

    def render(self) -> str:
        return f"{self.a.render()} after you {self.b.render()}"


Node = Union[GoTo, Open, Pickup, PutNext, And, Then, After]
CLAUSE_TYPES = (GoTo, Open, Pickup, PutNext)
_CONNECTOR = {And: "and", Then: "then", After: "after_you"}


@dataclass(frozen=True)
class Mission:
    root: Optional[Node]

    @property
    def surface(self) -> str:
        return render(self)

    @property
    def clauses(self) -> list[Clause]:
        out: list[Clause] = []

        def walk(n: Node) -> None:
            if isinstance(n, CLAUSE_TYPES):
                out.append(n)
            else:
                walk(n.a)  # type: ignore[union-attr]
                walk(n.b)  # type: ignore[union-attr]

        if self.root is not None:
            walk(self.root)
        return out

    @property
    def connectors(self) -> list[str]:
        out: list[str] = []

        def walk(n: Node) -> None:
            if not isinstance(n, CLAUSE_TYPES):
                walk(n.a)  # type: ignore[union-attr]
                out.append(_CONNECTOR[type(n)])
                walk(n.b)  # type: ignore[union-attr]

        if self.root is not None:
            walk(self.root)
        return out

    def descriptors(self) -> list[ObjectDesc]:
        out = []
        for c in self.clauses:
            out.extend([c.move, c.fixed] if isinstance(c, PutNext) else [c.desc])
        return out


def render(mission: Mission) -> str:
    return "" if mission.root is None else mission.root.render()


# --- parsing -----------------------------------------------------------------

_DESC_RE = re.compile(
    r"^(?P<art>the|a) (?:(?P<color>" + "|".join(COLORS) + r") )?(?P<kind>" + "|".join(KINDS) + r")"
    r"(?: (?P<loc>in front of you|behind you|on your left|on your right))?$"
)


def parse_desc(text: str) -> ObjectDesc:
    m = _DESC_RE.match(text.strip())
    if m is None:
        raise MissionParseError(f"bad object description: {text!r}")
    loc = m.group("loc")
    return ObjectDesc(m.group("kind"), m.group("color"), _TEXT_LOC[loc] if loc else None, m.group("art") == "the")


def _parse_clause(text: str) -> Clause:
    if text.startswith("go to "):
        return GoTo(parse_desc(text[6:]))
    if text.startswith("open "):
        return Open(parse_desc(text[5:]))
    if text.startswith("pick up "):
        return Pickup(parse_desc(text[8:]))
    if text.startswith("put "):
        move, sep, fixed = text[4:].partition(" next to ")
        if not sep:
            raise MissionParseError(f"put clause without 'next to': {text!r}")
        return PutNext(parse_desc(move), parse_desc(fixed))
    raise MissionParseError(f"unknown clause: {text!r}")


def _parse_and(text: str) -> Node:
    a, sep, b = text.partition(" and ")
    if not sep:
        return _parse_clause(text)
    return And(_parse_clause(a), _parse_clause(b))


def parse_mission(text: str) -> Mission:
    """Inverse of render for the grammar emitted by the level generators."""
    text = text.strip().rstrip(".")
    if not text:
        return Mission(None)
    if ", then " in text:
        a, _, b = text.partition(", then ")
        return Mission(Then(_parse_and(a), _parse_and(b)))
    if " after you " in text:
        a, _, b = text.partition(" after you ")
        return Mission(After(_parse_and(a), _parse_and(b)))
    return Mission(_parse_and(text))


# --- matching ----------------------------------------------------------------


def _loc_ok(desc: ObjectDesc, obj: WorldObject, state: WorldState) -> bool:
    if desc.loc is None:
        return True
    agent = state.agent
    col, row = state.layout.room_of(agent.pos)
    if not state.layout.in_room(obj.pos, col, row):  # type: ignore[arg-type]
        return False
    vx, vy = obj.pos[0] - agent.pos[0], obj.pos[1] - agent.pos[1]  # type: ignore[index]
    d1 = DIR_VECS[agent.direction]
    d2 = (-d1[1], d1[0])
    along = vx * d1[0] + vy * d1[1]
    side = vx * d2[0] + vy * d2[1]
    return {
        "in_front_of_you": along > 0,
        "behind_you": along < 0,
        "on_your_left": side < 0,
        "on_your_right": side > 0,
    }[desc.loc]


def match_objects(desc: ObjectDesc, state: WorldState) -> list[WorldObject]:
    """On-grid objects matching a descriptor, location evaluated from the agent's pose in `state`."""
    return [o for o in state.objects if desc.matches(o) and _loc_ok(desc, o, state)]


def match_ids(desc: ObjectDesc, state: WorldState) -> frozenset[int]:
    ids = frozenset(o.oid for o in match_objects(desc, state))
    if not ids:
        raise IllPosedMission(f"{desc.render()!r} matches nothing")
    return ids


def clause_holds(clause: Clause, ids: tuple[frozenset[int], ...], state: WorldState) -> bool:
    if isinstance(clause, GoTo):
        return any(o.oid in ids[0] and is_adjacent(state.agent.pos, o.pos) for o in state.objects)  # type: ignore[arg-type]
    if isinstance(clause, Open):
        return any(o.oid in ids[0] and o.is_open for o in state.objects)
    if isinstance(clause, Pickup):
        c = state.agent.carrying
        return c is not None and c.oid in ids[0]
    movers = [o for o in state.objects if o.oid in ids[0]]
    fixed = [o for o in state.objects if o.oid in ids[1]]
    return any(m.oid != f.oid and is_adjacent(m.pos, f.pos) for m in movers for f in fixed)  # type: ignore[arg-type]


class _Tracker:
    """Earliest-completion bookkeeping for one node of the mission tree.

    A node is armed at `start` and completes at the first trace index >= start
    where its condition holds.  Sequencing arms the second part at the index the
    first part completed (non-strict), which is optimal because completion is
    monotone in the arming index.
    """

    def __init__(self, node: Node, initial: WorldState):
        self.node = node
        self.start: Optional[int] = None
        self.done: Optional[int] = None
        if isinstance(node, CLAUSE_TYPES):
            descs = (node.move, node.fixed) if isinstance(node, PutNext) else (node.desc,)
            self.ids = tuple(match_ids(d, initial) for d in descs)
            self.kids: tuple[_Tracker, ...] = ()
        else:
            self.kids = (_Tracker(node.a, initial), _Tracker(node.b, initial))  # type: ignore[union-attr]

    def arm(self, t: int) -> None:
        if self.start is not None:
            return
        self.start = t
        if isinstance(self.node, And):
            for k in self.kids:
                k.arm(t)
        elif isinstance(self.node, Then):
            self.kids[0].arm(t)
        elif isinstance(self.node, After):
            self.kids[1].arm(t)

    def feed(self, state: WorldState, t: int) -> None:
        if self.start is None or self.done is not None:
            return
        node = self.node
        if not self.kids:
            if clause_holds(node, self.ids, state):  # type: ignore[arg-type]
                self.done = t
            return
        if isinstance(node, And):
            for k in self.kids:
                k.feed(state, t)
            if all(k.done is not None for k in self.kids):
                self.done = t
            return
        first, second = (self.kids[0], self.kids[1]) if isinstance(node, Then) else (self.kids[1], self.kids[0])
        first.feed(state, t)
        if first.done is not None:
            second.arm(first.done)
            second.feed(state, t)
            if second.done is not None:
                self.done = t


class MissionTracker:
    """Incremental success checker; feed states in trace order."""

    def __init__(self, mission: Mission, initial: WorldState):
        self.mission = mission
        self._root = None if mission.root is None else _Tracker(mission.root, initial)
        if self._root is not None:
            self._root.arm(0)
        self._t = 0

    def feed(self, state: WorldState) -> bool:
        if self._root is not None:
            self._root.feed(state, self._t)
        self._t += 1
        return self.success

    @property
    def success(self) -> bool:
        return self._root is None or self._root.done is not None


def check_success(mission: Mission, trace: Sequence[WorldState]) -> bool:
    """True iff every clause holds at some trace index consistent with the ordering constraints."""
    if mission.root is None:
        return True
    if not trace:
        return False
    tracker = MissionTracker(mission, trace[0])
    for s in trace:
        if tracker.feed(s):
            return True
    return False


def descriptor_for(obj: WorldObject, state: WorldState, with_color: bool = True) -> ObjectDesc:
    """Descriptor naming `obj`, with the article chosen from the match count in `state`."""
    d = ObjectDesc(obj.kind, obj.color if with_color else None)
    return with_article(d, state)


def with_article(desc: ObjectDesc, state: WorldState) -> ObjectDesc:
    n = len(match_objects(desc, state))
    return ObjectDesc(desc.kind, desc.color, desc.loc, n == 1)


def iter_nodes(node: Optional[Node]) -> Iterable[Node]:
    if node is None:
        return
    yield node
    if not isinstance(node, CLAUSE_TYPES):
        yield from iter_nodes(node.a)  # type: ignore[union-attr]
        yield from iter_nodes(node.b)  # type: ignore[union-attr]
