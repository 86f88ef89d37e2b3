"""OmniBot: an omniscient subgoal-stack expert with dynamic subgoal insertion."""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence, Union

import numpy as np

from ._kernels import INF
from .grid import DIR_VECS, Action, Coord, WorldState, front_cell, transition
from .missions import (
    After,
    And,
    GoTo,
    Mission,
    MissionTracker,
    Node,
    ObjectDesc,
    Open,
    Pickup,
    PutNext,
    Then,
    match_objects,
)
from .navigation import best_action, cost_grid, extract_path, field_for

GONEXTTO, OPEN, PICKUP, DROP = "GoNextTo", "Open", "Pickup", "Drop"
KINDS = (GONEXTTO, OPEN, PICKUP, DROP)

Target = Union[Coord, ObjectDesc, None]


@dataclass(frozen=True)
class Subgoal:
    kind: str
    target: Target = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown subgoal {self.kind!r}")
        if (self.kind == GONEXTTO) != (self.target is not None):
            raise ValueError("only GoNextTo carries a target")

    def label(self) -> str:
        """Trace listing form, e.g. `(GoNextToSubgoal: (20,12))`."""
        if self.kind != GONEXTTO:
            return f"({self.kind}Subgoal)"
        t = self.target
        if isinstance(t, ObjectDesc):
            words = [w for w in (t.color, t.kind) if w]
            return f"(GoNextToSubgoal: {' '.join(words)})"
        return f"(GoNextToSubgoal: ({t[0]},{t[1]}))"  # type: ignore[index]

    def to_json(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind}
        if isinstance(self.target, tuple):
            d["target"] = [self.target[0], self.target[1]]
        return d


def go(target: Target) -> Subgoal:
    return Subgoal(GONEXTTO, target)


OPEN_SG, PICKUP_SG, DROP_SG = Subgoal(OPEN), Subgoal(PICKUP), Subgoal(DROP)


def stack_label(stack: Iterable[Subgoal]) -> str:
    return "[" + ", ".join(s.label() for s in stack) + "]"


# --- mission translation ----------------------------------------------------


def translate_mission(mission: Mission) -> list[Subgoal]:
    """Default-initialisation stack (top = last element)."""
    stack: list[Subgoal] = []

    def process(n: Node) -> None:
        if isinstance(n, GoTo):
            stack.append(go(n.desc))
        elif isinstance(n, Open):
            stack.extend([OPEN_SG, go(n.desc)])
        elif isinstance(n, Pickup):
            # safety Drop beneath every pickup
            stack.extend([DROP_SG, PICKUP_SG, go(n.desc)])
        elif isinstance(n, PutNext):
            stack.extend([DROP_SG, go(n.fixed), PICKUP_SG, go(n.move)])
        elif isinstance(n, (And, Then)):
            process(n.b)
            process(n.a)
        elif isinstance(n, After):
            process(n.a)
            process(n.b)
        else:  # pragma: no cover
            raise TypeError(n)

    if mission.root is not None:
        process(mission.root)
    return stack


def count_safety_drops(mission: Mission) -> int:
    return sum(isinstance(c, Pickup) for c in mission.clauses)


# --- trace ------------------------------------------------------------------


@dataclass
class StackEvent:
    step: int
    stack: list[Subgoal]


@dataclass
class EpisodeTrace:
    actions: list[Action]
    states: list[WorldState]
    added_subgoals: int
    success: bool
    initial_stack: list[Subgoal]
    failure: Optional[str] = None
    events: list[StackEvent] = field(default_factory=list)
    # executed subgoals in execution order, with explicit approach moves; replayable with no insertions
    executed: list[Subgoal] = field(default_factory=list)
    step_budget: int = 0

    @property
    def steps(self) -> int:
        return len(self.actions)

    def to_json(self) -> dict[str, Any]:
        return {
            "actions": [a.value for a in self.actions],
            "added_subgoals": self.added_subgoals,
            "success": self.success,
            "steps": self.steps,
            "step_budget": self.step_budget,
            "failure": self.failure,
        }


class _Fail(Exception):
    pass


@dataclass
class _Frame:
    sg: Subgoal
    unlock: bool = False  # Open frame that fetched its own key
    forbid_color: Optional[str] = None  # GoNextTo(key) must not cross this locked door
    # cached resolution, valid while the frame stays on top
    goals: Optional[tuple[Coord, ...]] = None
    cache_key: Any = None
    cost: Optional[np.ndarray] = None
    field: Optional[np.ndarray] = None


class OmniBot:
    def __init__(
        self,
        initial: WorldState,
        mission: Mission,
        stack: Sequence[Subgoal],
        allow_additions: bool = True,
        addition_budget: Optional[int] = None,
        max_steps: Optional[int] = None,
        record_events: bool = False,
    ):
        self.state = initial
        self.initial = initial
        self.mission = mission
        self.frames = [_Frame(s) for s in stack]
        self.allow_additions = allow_additions
        self.addition_budget = addition_budget
        self.max_steps = max_steps if max_steps is not None else 8 * initial.width * initial.height
        self.record_events = record_events
        self.added = 0
        self.actions: list[Action] = []
        self.states = [initial]
        self.executed: list[Subgoal] = []
        self.events: list[StackEvent] = []
        self.tracker = MissionTracker(mission, initial)
        self._desc_ids: dict[ObjectDesc, frozenset[int]] = {}
        self._unlock_cache: tuple[Any, frozenset[str]] = (None, frozenset())
        self._snapshot()

    # -- bookkeeping

    def _snapshot(self) -> None:
        if self.record_events:
            self.events.append(StackEvent(len(self.actions), [f.sg for f in self.frames]))

    def _insert(self, below: list[Subgoal], above: list[Subgoal]) -> None:
        """Insert `below` under the current top frame and push `above` over it."""
        n = len(below) + len(above)
        if not self.allow_additions or (self.addition_budget is not None and self.added + n > self.addition_budget):
            raise _Fail("addition budget exhausted")
        self.added += n
        idx = len(self.frames) - 1
        self.frames[idx:idx] = [_Frame(s) for s in below]
        for f in self.frames:
            f.goals = None
        self.frames.extend(_Frame(s) for s in above)
        self._snapshot()

    def _pop(self, executed: bool = True) -> None:
        f = self.frames.pop()
        if executed:
            self.executed.append(self._concrete(f))
        if self.frames:
            self.frames[-1].goals = None
        self._snapshot()

    def _concrete(self, f: _Frame) -> Subgoal:
        if f.sg.kind != GONEXTTO:
            return f.sg
        fpos = front_cell(self.state)
        return go(fpos) if fpos is not None else f.sg

    # -- world queries

    def _ids(self, desc: ObjectDesc) -> frozenset[int]:
        ids = self._desc_ids.get(desc)
        if ids is None:
            ids = frozenset(o.oid for o in match_objects(desc, self.initial))
            self._desc_ids[desc] = ids
        return ids

    def _unlockable(self) -> frozenset[str]:
        """Colors of locked doors the bot may plan through: key carried or reachable without other locked doors."""
        s = self.state
        colors: set[str] = set()
        carried = s.agent.carrying
        if carried is not None and carried.kind == "key":
            colors.add(carried.color)
        locked = {o.color for o in s.objects if o.is_locked}
        if not locked:
            return frozenset(colors)
        # the agent only moves within its component, so its position is not part of the key
        key = (s.objects, carried)
        if self._unlock_cache[0] == key:
            return self._unlock_cache[1]
        while True:
            cost = cost_grid(s, soft=True, unlockable=colors)
            reach = (field_for(cost, [s.agent.pos], "onto") < INF).any(axis=2)
            grown = set(colors)
            for o in s.objects:
                if o.kind == "key" and o.color in locked and _touches(reach, o.pos):
                    grown.add(o.color)
            if grown == colors:
                break
            colors = grown
        out = frozenset(colors)
        self._unlock_cache = (key, out)
        return out

    def _resolve(self, frame: _Frame) -> tuple[tuple[Coord, ...], str]:
        """Goal cells and mode for a GoNextTo frame."""
        s = self.state
        t = frame.sg.target
        putnext = self._putnext_context()
        if isinstance(t, ObjectDesc):
            ids = self._ids(t)
            cells = tuple(o.pos for o in s.objects if o.oid in ids)  # type: ignore[misc]
        else:
            if not s.layout.in_grid(t):  # type: ignore[arg-type]
                raise _Fail(f"target {t} outside the grid")
            cells = (t,)  # type: ignore[assignment]
            if not putnext or s.is_free(t):  # type: ignore[arg-type]
                return cells, "facing"
        if not cells:
            raise _Fail(f"nothing on the grid matches {frame.sg.label()}")
        if putnext:
            around = sorted({n for c in cells for n in _neigh4(c) if s.is_free(n)}, key=lambda p: (p[1], p[0]))
            if not around:
                raise _Fail("no free cell next to the put-next anchor")
            return tuple(around), "facing"
        return cells, "facing"

    def _putnext_context(self) -> bool:
        return (
            self.state.agent.carrying is not None
            and len(self.frames) >= 2
            and self.frames[-2].sg.kind == DROP
        )

    def _plan(self, frame: _Frame) -> tuple[np.ndarray, np.ndarray]:
        s = self.state
        if frame.goals is None:
            frame.goals, _ = self._resolve(frame)
            frame.cache_key = None
        unl = self._unlockable()
        if frame.forbid_color is not None:
            unl = unl - {frame.forbid_color}
        key = (s.objects, s.agent.carrying, unl)
        if frame.cache_key != key:
            cost = cost_grid(s, soft=True, unlockable=unl)
            frame.cost = cost
            frame.field = field_for(cost, frame.goals, "facing")
            frame.cache_key = key
        return frame.cost, frame.field  # type: ignore[return-value]

    def _drop_pos(self, exclude: Iterable[Coord] = ()) -> Coord:
        """Nearest free cell, preferring spots that do not cut corridors."""
        s = self.state
        banned = set(exclude) | {s.agent.pos}
        fallback = None
        for c in _bfs_cells(s):
            if c in banned or not s.is_free(c):
                continue
            if _good_drop(s, c):
                return c
            if fallback is None:
                fallback = c
        if fallback is None:
            raise _Fail("no free cell to drop into")
        return fallback

    # -- handlers: each returns an action or None (stack changed, no action)

    def _step_gonextto(self, frame: _Frame) -> Optional[Action]:
        s = self.state
        cost, fld = self._plan(frame)
        pos, d = s.agent.pos, int(s.agent.direction)
        if fld[pos[1], pos[0], d] == 0:
            self._pop()
            return None
        if fld[pos[1], pos[0], d] >= INF:
            raise _Fail(f"{frame.sg.label()} unreachable")
        act = best_action(fld, cost, pos, d)
        if act is not Action.FORWARD:
            return act
        fpos = s.agent.front
        if s.is_passable(fpos):
            return act
        obj = s.object_at(fpos)
        assert obj is not None
        self.executed.append(go(fpos))
        if obj.is_door:
            self._insert([], [OPEN_SG])
            return None
        # movable blocker: relocate it off the remaining path
        _, cells = extract_path(fld, cost, s.agent)
        path = set(cells)
        if s.agent.carrying is None:
            drop = self._drop_pos(path)
            self._insert([], [DROP_SG, go(drop), PICKUP_SG])
        else:
            drop_cur = self._drop_pos(path)
            drop_blk = self._drop_pos(path | {drop_cur})
            self._insert(
                [],
                [PICKUP_SG, go(drop_cur), DROP_SG, go(drop_blk), PICKUP_SG, go(fpos), DROP_SG, go(drop_cur)],
            )
        return None

    def _step_open(self, frame: _Frame) -> Optional[Action]:
        s = self.state
        fpos = front_cell(s)
        door = None if fpos is None else s.object_at(fpos)
        if door is None or not door.is_door:
            self._pop(executed=False)
            return None
        if door.is_open:
            self._pop()
            return None
        carried = s.agent.carrying
        if door.is_locked and not (carried is not None and carried.kind == "key" and carried.color == door.color):
            key_desc = ObjectDesc("key", door.color)
            if not any(o.kind == "key" and o.color == door.color for o in s.objects):
                raise _Fail(f"no {door.color} key for the locked door at {fpos}")
            fetch = [go(fpos), PICKUP_SG, go(key_desc)]
            if carried is None:
                self._insert([], fetch)
            else:
                drop_cur = self._drop_pos()
                self._insert([PICKUP_SG, go(drop_cur)], fetch + [DROP_SG, go(drop_cur)])
            frame.unlock = True
            self.frames[-1 - (0 if carried is None else 2)].forbid_color = door.color
            return None
        return Action.TOGGLE

    def _after_toggle(self, frame: _Frame) -> None:
        self._pop()
        if frame.unlock:
            # park the key; the Drop handler picks the spot once it is on top
            self._insert([], [DROP_SG])

    def _step_pickup(self, frame: _Frame) -> Optional[Action]:
        s = self.state
        fpos = front_cell(s)
        obj = None if fpos is None else s.object_at(fpos)
        if obj is None or not obj.portable:
            self._pop(executed=False)
            return None
        if s.agent.carrying is not None:
            drop = self._drop_pos({fpos})  # type: ignore[arg-type]
            self._insert([], [go(fpos), DROP_SG, go(drop)])
            return None
        return Action.PICKUP

    def _step_drop(self, frame: _Frame) -> Optional[Action]:
        s = self.state
        if s.agent.carrying is None:
            self._pop(executed=False)
            return None
        fpos = front_cell(s)
        if fpos is not None and s.is_free(fpos):
            return Action.DROP
        self._insert([], [go(self._drop_pos())])
        return None

    def _record_pending(self) -> None:
        """The mission can finish mid-approach; log the approach target so `executed` replays."""
        if not self.frames or self.frames[-1].sg.kind != GONEXTTO:
            return
        frame = self.frames[-1]
        try:
            goals = frame.goals if frame.goals is not None else self._resolve(frame)[0]
        except _Fail:
            return
        pos = self.state.agent.pos
        near = [c for c in goals if abs(c[0] - pos[0]) + abs(c[1] - pos[1]) == 1]
        if near or goals:
            self.executed.append(go((near or list(goals))[0]))

    # -- main loop

    def run(self) -> EpisodeTrace:
        failure = None
        success = self.tracker.feed(self.state)
        idle = 0
        try:
            while not success:
                if not self.frames:
                    failure = "stack exhausted"
                    break
                if len(self.actions) >= self.max_steps:
                    failure = "step budget exhausted"
                    break
                frame = self.frames[-1]
                kind = frame.sg.kind
                if kind == GONEXTTO:
                    act = self._step_gonextto(frame)
                elif kind == OPEN:
                    act = self._step_open(frame)
                elif kind == PICKUP:
                    act = self._step_pickup(frame)
                else:
                    act = self._step_drop(frame)
                if act is None:
                    idle += 1
                    if idle > 256:
                        raise _Fail("no progress")
                    continue
                idle = 0
                self.state, _ = transition(self.state, act)
                self.actions.append(act)
                self.states.append(self.state)
                if kind == OPEN:
                    self._after_toggle(frame)
                elif kind in (PICKUP, DROP):
                    self._pop()
                success = self.tracker.feed(self.state)
        except _Fail as exc:
            failure = str(exc)
        if success:
            self._record_pending()
        return EpisodeTrace(
            actions=self.actions,
            states=self.states,
            added_subgoals=self.added,
            success=success,
            initial_stack=[],
            failure=None if success else failure,
            events=self.events,
            executed=self.executed,
            step_budget=self.max_steps,
        )


def solve(
    instance: Any,
    init: Optional[Sequence[Subgoal]] = None,
    allow_additions: bool = True,
    addition_budget: Optional[int] = None,
    max_steps: Optional[int] = None,
    count_init_drops: bool = False,
    record_events: bool = False,
) -> EpisodeTrace:
    """Run the expert on an instance (anything with .state and .mission).

    init=None means default initialisation (translate_mission).  With
    count_init_drops the translation's safety Drops count as added subgoals.
    """
    mission: Mission = instance.mission
    stack = translate_mission(mission) if init is None else list(init)
    bot = OmniBot(instance.state, mission, stack, allow_additions, addition_budget, max_steps, record_events)
    trace = bot.run()
    trace.initial_stack = stack
    if init is None and count_init_drops:
        trace.added_subgoals += count_safety_drops(mission)
    return trace


def anticipatory_stack(instance: Any, max_rounds: int = 6) -> list[Subgoal]:
    """A coordinate-only stack the bot completes with zero insertions (the oracle decomposition)."""
    trace = solve(instance)
    if not trace.success:
        raise RuntimeError(f"expert failed: {trace.failure}")
    stack = list(reversed(trace.executed))
    for _ in range(max_rounds):
        t = solve(instance, init=stack, addition_budget=0)
        if t.success:
            return _trim(instance, stack)
        t = solve(instance, init=stack)
        if not t.success:
            break
        stack = list(reversed(t.executed))
    raise RuntimeError("could not build an insertion-free decomposition")


def _trim(instance: Any, stack: list[Subgoal]) -> list[Subgoal]:
    """Drop trailing no-op entries while the stack still succeeds unaided."""
    out = list(stack)
    while len(out) > 1:
        cand = out[1:]
        t = solve(instance, init=cand, addition_budget=0)
        if not t.success:
            break
        out = cand
    return out


# --- helpers ----------------------------------------------------------------


def _neigh4(c: Coord) -> list[Coord]:
    return [(c[0] + dx, c[1] + dy) for dx, dy in DIR_VECS]


def _touches(reach: np.ndarray, pos: Coord) -> bool:
    h, w = reach.shape
    return any(0 <= x < w and 0 <= y < h and reach[y, x] for x, y in _neigh4(pos))


def _bfs_cells(s: WorldState) -> Iterable[Coord]:
    """Cells reachable through walkable cells, in BFS order (east, south, west, north)."""
    start = s.agent.pos
    seen = {start}
    q = deque([start])
    while q:
        c = q.popleft()
        yield c
        for n in _neigh4(c):
            if n not in seen and s.is_passable(n):
                seen.add(n)
                q.append(n)


_RING = ((-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0))


def _good_drop(s: WorldState, c: Coord) -> bool:
    """Dropping at c keeps the neighbourhood connected and no object or doorway gets sealed."""
    agent = s.agent.pos

    def blocked(p: Coord) -> bool:
        return p != agent and not s.is_free(p)

    ring = [blocked((c[0] + dx, c[1] + dy)) for dx, dy in _RING]
    changes = sum(ring[i] != ring[(i + 1) % 8] for i in range(8))
    if changes > 2:
        return False
    for n in _neigh4(c):
        o = s.object_at(n)
        if o is None:
            continue
        if o.is_door:
            return False
        if not any(m != c and (m == agent or s.is_free(m)) for m in _neigh4(n)):
            return False
    return True


# --- text protocol for decompositions ----------------------------------------


def subgoal_line(sg: Subgoal) -> str:
    if sg.kind == GONEXTTO:
        t = sg.target
        if not isinstance(t, tuple):
            raise ValueError("only coordinate targets have a text form")
        return f"(GoNextToSubgoal, ({t[0]}, {t[1]}))"
    return f"({sg.kind}Subgoal)"


def stack_to_lines(stack: Sequence[Subgoal]) -> list[str]:
    """Execution order: first line runs first (the stack top)."""
    return [subgoal_line(s) for s in reversed(stack)]


_LINE_RE = re.compile(
    r"^\(\s*(?:GoNextToSubgoal\s*,\s*\(\s*(\d+)\s*,\s*(\d+)\s*\)|(Open|Pickup|Drop)Subgoal)\s*\)$"
)


def parse_subgoal_line(line: str) -> Subgoal:
    m = _LINE_RE.match(line.strip())
    if m is None:
        raise ValueError(f"unrecognised subgoal line {line.strip()!r}")
    x, y, kind = m.groups()
    return Subgoal(kind) if kind else go((int(x), int(y)))


def parse_stack_text(text: str, line_order: str = "execution") -> list[Subgoal]:
    """Subgoal lines (optionally wrapped in <START>/<END>) to a stack, top = last element.

    line_order="execution" reads the first line as the first subgoal to run;
    "stack" reads the last line as the top.
    """
    if line_order not in ("execution", "stack"):
        raise ValueError(f"unknown line order {line_order!r}")
    lines = [ln.strip() for ln in text.splitlines()]
    sgs = [parse_subgoal_line(ln) for ln in lines if ln and ln not in ("<START>", "<END>")]
    return sgs[::-1] if line_order == "execution" else sgs


__all__ = [
    "Subgoal",
    "EpisodeTrace",
    "OmniBot",
    "translate_mission",
    "solve",
    "anticipatory_stack",
    "stack_label",
    "stack_to_lines",
    "subgoal_line",
    "parse_subgoal_line",
    "parse_stack_text",
    "go",
    "GONEXTTO",
    "OPEN",
    "PICKUP",
    "DROP",
]
