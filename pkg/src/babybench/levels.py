"""Seeded procedural generation of the benchmark levels and the Plan environments."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .grid import (
    COLORS,
    DIR_VECS,
    AgentState,
    Coord,
    Direction,
    DoorState,
    Layout,
    WorldObject,
    WorldState,
    reading_order,
)
from .missions import (
    After,
    And,
    GoTo,
    IllPosedMission,
    Mission,
    Node,
    ObjectDesc,
    Open,
    Pickup,
    PutNext,
    Then,
    iter_nodes,
    match_ids,
    match_objects,
)
from .rng import Rng, derive_seed

MAX_ATTEMPTS = 64
PORTABLE_KINDS = ("key", "ball", "box")
LOC_NAMES = ("in_front_of_you", "behind_you", "on_your_left", "on_your_right")


class GenerationExhausted(RuntimeError):
    pass


class _Reject(Exception):
    pass


@dataclass(frozen=True)
class LevelRecipe:
    name: str
    difficulty: str
    num_cols: int = 1
    num_rows: int = 1
    room_size: int = 8
    num_dists: int = 0
    # "single" levels are hand-written; "levelgen" ones draw random instructions
    family: str = "single"
    locked_room_prob: float = 0.0
    locations: bool = False
    unblocking: bool = True
    implicit_unlock: bool = True
    action_kinds: tuple[str, ...] = ("goto", "pickup", "open", "putnext")
    instr_kinds: tuple[str, ...] = ("action", "and", "seq")
    skills: tuple[str, ...] = ()

    @property
    def env_name(self) -> str:
        return f"BabyAI-{self.name}-v0"


_ALL = ("room6x6", "ignore_grey")


def _r(name, diff, skills, **kw) -> LevelRecipe:
    return LevelRecipe(name=name, difficulty=diff, skills=tuple(skills), **kw)


LEVELS: dict[str, LevelRecipe] = {
    r.name: r
    for r in [
        _r("GoToObj", "Easy", ["room6x6"], num_dists=1),
        _r("GoToRedBallGrey", "Easy", ["room6x6", "ignore_grey"], num_dists=7),
        _r("GoToRedBall", "Medium", [*_ALL, "ignore_all"], num_dists=7),
        _r("GoToLocal", "Medium", [*_ALL, "ignore_all", "goto"], num_dists=8),
        _r("PutNextLocal", "Medium", [*_ALL, "ignore_all", "put"], num_dists=8),
        _r(
            "PickupLoc",
            "Medium",
            [*_ALL, "ignore_all", "pickup", "location"],
            num_dists=8,
            family="levelgen",
            locations=True,
            unblocking=False,
            action_kinds=("pickup",),
            instr_kinds=("action",),
        ),
        _r("GoToObjMaze", "Medium", ["room6x6", "maze"], num_cols=3, num_rows=3, num_dists=1),
        _r("GoTo", "Medium", [*_ALL, "ignore_all", "maze", "goto"], num_cols=3, num_rows=3, num_dists=18),
        _r("Pickup", "Medium", [*_ALL, "ignore_all", "maze", "pickup"], num_cols=3, num_rows=3, num_dists=18),
        _r(
            "UnblockPickup",
            "Hard",
            [*_ALL, "ignore_all", "maze", "unblock", "pickup"],
            num_cols=3,
            num_rows=3,
            num_dists=20,
        ),
        _r("Open", "Hard", [*_ALL, "ignore_all", "maze", "open"], num_cols=3, num_rows=3, num_dists=18),
        _r(
            "Synth",
            "Hard",
            [*_ALL, "ignore_all", "maze", "unblock", "unlock_explicit", "goto", "open", "pickup", "put"],
            num_cols=3,
            num_rows=3,
            num_dists=18,
            family="levelgen",
            locked_room_prob=0.5,
            implicit_unlock=False,
            instr_kinds=("action",),
        ),
        _r(
            "SynthLoc",
            "VeryHard",
            [*_ALL, "ignore_all", "maze", "unblock", "unlock_explicit", "goto", "open", "pickup", "put", "location"],
            num_cols=3,
            num_rows=3,
            num_dists=18,
            family="levelgen",
            locked_room_prob=0.5,
            locations=True,
            implicit_unlock=False,
            instr_kinds=("action",),
        ),
        _r(
            "GoToSeq",
            "VeryHard",
            [*_ALL, "ignore_all", "maze", "goto", "sequences"],
            num_cols=3,
            num_rows=3,
            num_dists=18,
            family="levelgen",
            unblocking=False,
            action_kinds=("goto",),
        ),
        _r(
            "SynthSeq",
            "VeryHard",
            [
                *_ALL, "ignore_all", "maze", "unblock", "unlock_explicit",
                "goto", "open", "pickup", "put", "location", "sequences",
            ],
            num_cols=3,
            num_rows=3,
            num_dists=18,
            family="levelgen",
            locked_room_prob=0.5,
            locations=True,
            implicit_unlock=False,
        ),
        _r(
            "BossLevel",
            "VeryHard",
            [
                *_ALL, "ignore_all", "maze", "unblock", "unlock_explicit", "unlock_implicit",
                "goto", "open", "pickup", "put", "location", "sequences",
            ],
            num_cols=3,
            num_rows=3,
            num_dists=18,
            family="levelgen",
            locked_room_prob=0.5,
            locations=True,
        ),
    ]
}

LEVEL_NAMES: tuple[str, ...] = tuple(LEVELS)
DIFFICULTIES = ("Easy", "Medium", "Hard", "VeryHard")
SKILLS = (
    "room6x6", "ignore_grey", "ignore_all", "maze", "unblock", "unlock_explicit", "unlock_implicit",
    "goto", "open", "pickup", "put", "location", "sequences",
)


def difficulty(level: str) -> str:
    return LEVELS[level].difficulty


def resolve_level(name: str) -> LevelRecipe:
    """Accept 'GoTo' or 'BabyAI-GoTo-v0'."""
    key = name
    if key.startswith("BabyAI-") and key.endswith("-v0"):
        key = key[len("BabyAI-") : -len("-v0")]
    if key not in LEVELS:
        raise KeyError(f"unknown level {name!r}")
    return LEVELS[key]


@dataclass(frozen=True)
class PlanEnvSpec:
    size: str
    n_distractors: int

    SIZES = {"Small": 8, "Medium": 16, "Large": 24, "Ultra": 32}
    CAPS = {"Small": 7, "Medium": 60, "Large": 120, "Ultra": 180}

    def __post_init__(self) -> None:
        size = self.size.capitalize()
        if size not in self.SIZES:
            raise ValueError(f"unknown plan size {self.size!r}")
        object.__setattr__(self, "size", size)
        if not 0 <= self.n_distractors <= self.CAPS[size]:
            raise ValueError(f"{size} allows at most {self.CAPS[size]} distractors")

    @property
    def room_size(self) -> int:
        return self.SIZES[self.size]

    @property
    def env_name(self) -> str:
        return f"CustomBabyAI-GoToRedBall-{self.size}-{self.n_distractors}Dists-v0"

    @classmethod
    def from_name(cls, name: str) -> "PlanEnvSpec":
        parts = name.split("-")
        if len(parts) != 5 or parts[0] != "CustomBabyAI" or not parts[3].endswith("Dists"):
            raise ValueError(f"not a plan environment name: {name!r}")
        return cls(parts[2], int(parts[3][: -len("Dists")]))


@dataclass(frozen=True)
class EnvInstance:
    level: str
    seed: int
    state: WorldState
    mission: Mission
    attempt: int = 0

    @property
    def env_name(self) -> str:
        if self.level in LEVELS:
            return LEVELS[self.level].env_name
        return self.level


# --- room-grid builder --------------------------------------------------------


@dataclass
class _Room:
    col: int
    row: int
    # door position per wall in direction order (E, S, W, N); None on the outer boundary
    door_pos: list = field(default_factory=lambda: [None] * 4)
    doors: list = field(default_factory=lambda: [None] * 4)
    locked: bool = False


class _Builder:
    def __init__(self, rng: Rng, num_cols: int, num_rows: int, room_size: int):
        self.rng = rng
        self.layout = Layout(num_cols, num_rows, room_size)
        self.objects: dict[Coord, WorldObject] = {}
        self.agent: Optional[AgentState] = None
        self.locked_room: Optional[_Room] = None
        self.rooms = [[_Room(i, j) for i in range(num_cols)] for j in range(num_rows)]
        step = room_size - 1
        for j in range(num_rows):
            for i in range(num_cols):
                room = self.rooms[j][i]
                x0, y0 = i * step, j * step
                if i + 1 < num_cols:
                    room.door_pos[0] = (x0 + step, rng.randint(y0 + 1, y0 + step - 1))
                if j + 1 < num_rows:
                    room.door_pos[1] = (rng.randint(x0 + 1, x0 + step - 1), y0 + step)
        for j in range(num_rows):
            for i in range(num_cols):
                room = self.rooms[j][i]
                if i > 0:
                    room.door_pos[2] = self.rooms[j][i - 1].door_pos[0]
                if j > 0:
                    room.door_pos[3] = self.rooms[j - 1][i].door_pos[1]

    def room(self, i: int, j: int) -> _Room:
        return self.rooms[j][i]

    def neighbor(self, room: _Room, k: int) -> Optional[_Room]:
        dx, dy = DIR_VECS[k]
        i, j = room.col + dx, room.row + dy
        if 0 <= i < self.layout.num_cols and 0 <= j < self.layout.num_rows:
            return self.rooms[j][i]
        return None

    def rand_room(self) -> _Room:
        return self.room(self.rng.randbelow(self.layout.num_cols), self.rng.randbelow(self.layout.num_rows))

    def add_door(self, room: _Room, k: int, color: Optional[str] = None, locked: bool = False) -> WorldObject:
        if room.doors[k] is not None:
            raise AssertionError("door already exists")
        nb = self.neighbor(room, k)
        assert nb is not None and room.door_pos[k] is not None
        color = color if color is not None else self.rng.choice(COLORS)
        door = WorldObject("door", color, room.door_pos[k], DoorState.LOCKED if locked else DoorState.CLOSED)
        room.doors[k] = door
        nb.doors[(k + 2) % 4] = door
        if locked:
            room.locked = True
        self.objects[door.pos] = door  # type: ignore[index]
        return door

    def _free_in_room(self, room: _Room, pos: Coord) -> bool:
        return pos not in self.objects and (self.agent is None or pos != self.agent.pos)

    def add_object(self, room: _Room, kind: str, color: str) -> WorldObject:
        cells = self.layout.room_interior(room.col, room.row)
        for _ in range(1000):
            pos = self.rng.choice(cells)
            if self._free_in_room(room, pos):
                obj = WorldObject(kind, color, pos)
                self.objects[pos] = obj
                return obj
        raise _Reject("room full")

    def add_distractors(self, n: int, all_unique: bool, room: Optional[_Room] = None, colors=COLORS) -> list[WorldObject]:
        existing = [(o.kind, o.color) for o in self.objects.values()]
        dists = []
        tries = 0
        while len(dists) < n:
            tries += 1
            if tries > 10000:
                raise _Reject("cannot place distractors")
            color = self.rng.choice(colors)
            kind = self.rng.choice(PORTABLE_KINDS)
            if all_unique and (kind, color) in existing:
                continue
            target = room if room is not None else self.rand_room()
            obj = self.add_object(target, kind, color)
            existing.append((kind, color))
            dists.append(obj)
        return dists

    def place_agent(self, room: Optional[_Room] = None) -> AgentState:
        room = room if room is not None else self.rand_room()
        cells = self.layout.room_interior(room.col, room.row)
        for _ in range(1000):
            pos = self.rng.choice(cells)
            if pos in self.objects:
                continue
            d = Direction(self.rng.randbelow(4))
            dx, dy = DIR_VECS[d]
            front = (pos[0] + dx, pos[1] + dy)
            # never start facing an object
            if front in self.objects:
                continue
            self.agent = AgentState(pos, d)
            return self.agent
        raise _Reject("no room for the agent")

    def room_reach(self) -> set[tuple[int, int]]:
        start = self.room(0, 0)
        seen = {(0, 0)}
        todo = [start]
        while todo:
            r = todo.pop()
            for k in range(4):
                nb = self.neighbor(r, k)
                if nb is not None and r.doors[k] is not None and (nb.col, nb.row) not in seen:
                    seen.add((nb.col, nb.row))
                    todo.append(nb)
        return seen

    def connect_all(self, max_iters: int = 5000) -> None:
        total = self.layout.num_cols * self.layout.num_rows
        for _ in range(max_iters):
            if len(self.room_reach()) == total:
                return
            room = self.rand_room()
            k = self.rng.randbelow(4)
            nb = self.neighbor(room, k)
            if room.door_pos[k] is None or room.doors[k] is not None or nb is None:
                continue
            if room.locked or nb.locked:
                continue
            self.add_door(room, k, color=self.rng.choice(COLORS), locked=False)
        raise _Reject("could not connect rooms")

    def add_locked_room(self) -> None:
        while True:
            room = self.rand_room()
            k = self.rng.randbelow(4)
            if self.neighbor(room, k) is None:
                continue
            door = self.add_door(room, k, locked=True)
            self.locked_room = room
            break
        while True:
            kroom = self.rand_room()
            if kroom is self.locked_room:
                continue
            self.add_object(kroom, "key", door.color)
            break

    def in_locked_room(self, pos: Coord) -> bool:
        r = self.locked_room
        return r is not None and self.layout.in_room(pos, r.col, r.row)

    def agent_enclosed(self, min_cells: int = 3) -> bool:
        """True when objects seal the agent into fewer than `min_cells` walkable cells."""
        lay = self.layout
        assert self.agent is not None
        seen = {self.agent.pos}
        stack = [self.agent.pos]
        while stack and len(seen) < min_cells:
            p = stack.pop()
            for dx, dy in DIR_VECS:
                n = (p[0] + dx, p[1] + dy)
                if n in seen or not lay.in_grid(n):
                    continue
                obj = self.objects.get(n)
                if obj is not None and not obj.is_door:
                    continue
                if obj is None and lay.is_wall(n):
                    continue
                seen.add(n)
                stack.append(n)
        return len(seen) < min_cells

    def state(self) -> WorldState:
        assert self.agent is not None
        objs = sorted(self.objects.values(), key=reading_order)
        objs = [dataclasses.replace(o, oid=i) for i, o in enumerate(objs)]
        return WorldState(self.layout, tuple(objs), self.agent)

    def objs_reachable(self) -> bool:
        """Every object touchable from the agent through free cells and doors (locks ignored)."""
        lay = self.layout
        assert self.agent is not None
        seen = set()
        stack = [self.agent.pos]
        while stack:
            p = stack.pop()
            if not lay.in_grid(p) or p in seen:
                continue
            seen.add(p)
            obj = self.objects.get(p)
            if lay.is_wall(p) and (obj is None or not obj.is_door):
                continue
            if obj is not None and not obj.is_door:
                continue
            stack.extend((p[0] + dx, p[1] + dy) for dx, dy in DIR_VECS)
        return all(p in seen for p in self.objects)


# --- instruction sampling -----------------------------------------------------


def _pick_desc(b: _Builder, state: WorldState, recipe: LevelRecipe, kinds: Sequence[str]) -> ObjectDesc:
    for _ in range(100):
        color = b.rng.choice((None, *COLORS))
        kind = b.rng.choice(kinds)
        loc = None
        if recipe.locations and b.rng.coin(0.5):
            loc = b.rng.choice(LOC_NAMES)
        desc = ObjectDesc(kind, color, loc)
        objs = match_objects(desc, state)
        if not objs:
            continue
        if not recipe.implicit_unlock and b.locked_room is not None:
            if all(b.in_locked_room(o.pos) for o in objs):  # type: ignore[arg-type]
                continue
        return dataclasses.replace(desc, definite=len(objs) == 1)
    raise _Reject("no suitable object description")


def _rand_instr(b: _Builder, state: WorldState, recipe: LevelRecipe, instr_kinds: Sequence[str]) -> Node:
    kind = b.rng.choice(instr_kinds)
    if kind == "action":
        action = b.rng.choice(recipe.action_kinds)
        if action == "goto":
            return GoTo(_pick_desc(b, state, recipe, ("key", "ball", "box", "door")))
        if action == "pickup":
            return Pickup(_pick_desc(b, state, recipe, PORTABLE_KINDS))
        if action == "open":
            return Open(_pick_desc(b, state, recipe, ("door",)))
        return PutNext(
            _pick_desc(b, state, recipe, PORTABLE_KINDS), _pick_desc(b, state, recipe, ("key", "ball", "box", "door"))
        )
    if kind == "and":
        return And(_rand_instr(b, state, recipe, ("action",)), _rand_instr(b, state, recipe, ("action",)))
    a = _rand_instr(b, state, recipe, ("action", "and"))
    c = _rand_instr(b, state, recipe, ("action", "and"))
    return Then(a, c) if b.rng.choice(("before", "after")) == "before" else After(a, c)


def _validate(mission: Mission, state: WorldState, recipe: LevelRecipe) -> None:
    locked_colors = {o.color for o in state.objects if o.is_locked}
    for node in iter_nodes(mission.root):
        if isinstance(node, PutNext):
            move, fixed = match_ids(node.move, state), match_ids(node.fixed, state)
            if move & fixed:
                raise _Reject("put-next descriptors overlap")
            if any(
                abs(a.pos[0] - c.pos[0]) + abs(a.pos[1] - c.pos[1]) == 1  # type: ignore[index]
                for a in state.objects
                if a.oid in move
                for c in state.objects
                if c.oid in fixed
            ):
                raise _Reject("objects already next to each other")
        if isinstance(node, (GoTo, Open, Pickup, PutNext)) and not recipe.unblocking:
            descs = (node.move, node.fixed) if isinstance(node, PutNext) else (node.desc,)
            for d in descs:
                if d.kind == "key" and d.color in locked_colors:
                    raise _Reject("mission names a key that opens a locked door")
        for d in (node.move, node.fixed) if isinstance(node, PutNext) else (
            (node.desc,) if isinstance(node, (GoTo, Open, Pickup)) else ()
        ):
            match_ids(d, state)


# --- level bodies -------------------------------------------------------------


def _single_room_goto(b: _Builder, recipe: LevelRecipe) -> Mission:
    name = recipe.name
    if name == "GoToObj":
        dists = b.add_distractors(1, all_unique=False, room=b.room(0, 0))
        b.place_agent(b.room(0, 0))
        target = dists[0]
    elif name in ("GoToRedBallGrey", "GoToRedBall"):
        b.place_agent(b.room(0, 0))
        target = b.add_object(b.room(0, 0), "ball", "red")
        colors = ("grey",) if name == "GoToRedBallGrey" else COLORS
        while True:
            dists = b.add_distractors(recipe.num_dists, all_unique=False, room=b.room(0, 0), colors=colors)
            if all((d.kind, d.color) != ("ball", "red") for d in dists):
                break
            for d in dists:
                del b.objects[d.pos]  # type: ignore[arg-type]
        if not b.objs_reachable():
            raise _Reject("unreachable object")
    else:
        b.place_agent(b.room(0, 0))
        dists = b.add_distractors(recipe.num_dists, all_unique=name == "PutNextLocal", room=b.room(0, 0))
        if not b.objs_reachable():
            raise _Reject("unreachable object")
        if name == "PutNextLocal":
            o1, o2 = b.rng.sample(dists, 2)
            state = b.state()
            return Mission(PutNext(_exact(o1, state), _exact(o2, state)))
        target = b.rng.choice(dists)
    return Mission(GoTo(_exact(target, b.state())))


def _exact(obj: WorldObject, state: WorldState) -> ObjectDesc:
    d = ObjectDesc(obj.kind, obj.color)
    return dataclasses.replace(d, definite=len(match_objects(d, state)) == 1)


def _maze(b: _Builder, recipe: LevelRecipe) -> Mission:
    b.place_agent()
    b.connect_all()
    dists = b.add_distractors(recipe.num_dists, all_unique=False)
    reachable = b.objs_reachable()
    if recipe.name == "UnblockPickup":
        if reachable:
            raise _Reject("all objects reachable")
    elif not reachable:
        raise _Reject("unreachable object")
    state = b.state()
    if recipe.name == "Open":
        doors = sorted((o for o in b.objects.values() if o.is_door), key=reading_order)
        return Mission(Open(_exact(b.rng.choice(doors), state)))
    target = b.rng.choice(dists)
    desc = _exact(target, state)
    if recipe.name in ("Pickup", "UnblockPickup"):
        return Mission(Pickup(desc))
    return Mission(GoTo(desc))


def _levelgen(b: _Builder, recipe: LevelRecipe) -> Mission:
    if b.rng.random() < recipe.locked_room_prob:
        b.add_locked_room()
    b.connect_all()
    b.add_distractors(recipe.num_dists, all_unique=False)
    while True:
        b.agent = None
        b.place_agent()
        if not b.in_locked_room(b.agent.pos):  # type: ignore[union-attr]
            break
    if not recipe.unblocking and not b.objs_reachable():
        raise _Reject("unreachable object")
    state = b.state()
    return Mission(_rand_instr(b, state, recipe, recipe.instr_kinds))


def _build(recipe: LevelRecipe, rng: Rng) -> tuple[WorldState, Mission]:
    b = _Builder(rng, recipe.num_cols, recipe.num_rows, recipe.room_size)
    if recipe.family == "levelgen":
        mission = _levelgen(b, recipe)
    elif recipe.num_cols == 1:
        mission = _single_room_goto(b, recipe)
    else:
        mission = _maze(b, recipe)
    if b.agent_enclosed():
        raise _Reject("agent sealed in by objects")
    state = b.state()
    state.validate()
    try:
        _validate(mission, state, recipe)
    except IllPosedMission as exc:  # pragma: no cover - descriptors are drawn from existing objects
        raise _Reject(str(exc))
    return state, mission


def _attempts(label: str, seed: int, make: Callable[[Rng], tuple[WorldState, Mission]], check) -> EnvInstance:
    for attempt in range(MAX_ATTEMPTS):
        rng = Rng(derive_seed(seed, label, attempt))
        try:
            state, mission = make(rng)
        except _Reject:
            continue
        inst = EnvInstance(label, seed, state, mission, attempt)
        if check(inst):
            return inst
    raise GenerationExhausted(f"{label} seed {seed}: no valid instance in {MAX_ATTEMPTS} attempts")


def generate(level: str, seed: int) -> EnvInstance:
    """Deterministic instance for (level, seed); only solvable instances are returned."""
    recipe = resolve_level(level)
    return _attempts(recipe.name, seed, lambda rng: _build(recipe, rng), solvability_check)


def solvability_check(instance: EnvInstance) -> bool:
    from .omnibot import solve

    try:
        return solve(instance).success
    except IllPosedMission:
        return False


# --- Plan environments --------------------------------------------------------


def _build_plan(spec: PlanEnvSpec, rng: Rng) -> tuple[WorldState, Mission]:
    b = _Builder(rng, 1, 1, spec.room_size)
    room = b.room(0, 0)
    ball = b.add_object(room, "ball", "red")
    b.add_distractors(spec.n_distractors, all_unique=False, room=room, colors=("grey",))
    b.place_agent(room)
    if abs(b.agent.pos[0] - ball.pos[0]) + abs(b.agent.pos[1] - ball.pos[1]) == 1:  # type: ignore[union-attr,index]
        raise _Reject("agent starts next to the ball")
    state = b.state()
    return state, Mission(GoTo(ObjectDesc("ball", "red", definite=True)))


def plan_env_reachable(instance: EnvInstance) -> bool:
    """The ball can be reached by walking alone (no object needs moving)."""
    from .navigation import UnreachableGoal, plan_path

    target = plan_target(instance)
    try:
        plan_path(instance.state, target, "adjacent_to", soft=False)
    except UnreachableGoal:
        return False
    return True


def plan_target(instance: EnvInstance) -> Coord:
    for o in instance.state.objects:
        if o.kind == "ball" and o.color == "red":
            return o.pos  # type: ignore[return-value]
    raise ValueError("plan environment without a red ball")


def generate_plan_env(spec: PlanEnvSpec, seed: int) -> EnvInstance:
    def check(inst: EnvInstance) -> bool:
        return plan_env_reachable(inst) and solvability_check(inst)

    return _attempts(spec.env_name, seed, lambda rng: _build_plan(spec, rng), check)


def catalog_rows() -> list[dict]:
    """Recipe parameters as plain dicts (source for the level catalog document)."""
    out = []
    for r in LEVELS.values():
        out.append(
            {
                "level": r.name,
                "difficulty": r.difficulty,
                "rooms": f"{r.num_cols}x{r.num_rows}",
                "room_size": r.room_size,
                "distractors": r.num_dists,
                "locked_room_prob": r.locked_room_prob,
                "locations": r.locations,
                "unblocking": r.unblocking,
                "implicit_unlock": r.implicit_unlock,
                "instructions": "/".join(r.action_kinds) if r.family == "levelgen" else "fixed",
                "connectors": "/".join(r.instr_kinds) if r.family == "levelgen" else "action",
                "skills": ", ".join(r.skills),
            }
        )
    return out
