"""Navigation layer: cost grids, goal masks and shortest action sequences."""

from __future__ import annotations

from typing import Iterable, Literal, Optional

import numpy as np

from ._kernels import INF, distance_field
from .grid import DIR_VECS, Action, AgentState, Coord, WorldState

# enter cost of an obstruction the planner can clear (blocker, lockable door);
# large enough that any clear detour is preferred
SOFT = 1 << 16

Mode = Literal["adjacent_to", "onto", "facing"]


class UnreachableGoal(RuntimeError):
    pass


def cost_grid(
    state: WorldState,
    soft: bool = True,
    unlockable: Iterable[str] = (),
    hard_cells: Iterable[Coord] = (),
) -> np.ndarray:
    """Per-cell enter cost.  -1 impassable, 0 free/open door, 1 closed door, SOFT for a clearable obstruction.

    With soft=False only currently walkable cells are enterable.  `unlockable` lists
    colors of locked doors the caller knows how to open.
    """
    lay = state.layout
    cost = np.where(lay.walls, -1, 0).astype(np.int64)
    keys = set(unlockable)
    for o in state.objects:
        x, y = o.pos  # type: ignore[misc]
        if o.is_door:
            if o.is_open:
                c = 0
            elif not soft:
                c = -1
            elif o.is_locked:
                c = SOFT if o.color in keys else -1
            else:
                c = 1
        else:
            c = SOFT if soft else -1
        cost[y, x] = c
    for x, y in hard_cells:
        cost[y, x] = -1
    return cost


def goal_mask(shape: tuple[int, int], goals: Iterable[Coord], mode: Mode) -> np.ndarray:
    h, w = shape
    mask = np.zeros((h, w, 4), dtype=bool)
    for gx, gy in goals:
        if mode == "onto":
            if 0 <= gx < w and 0 <= gy < h:
                mask[gy, gx, :] = True
            continue
        for d, (dx, dy) in enumerate(DIR_VECS):
            nx, ny = gx - dx, gy - dy
            if not (0 <= nx < w and 0 <= ny < h):
                continue
            if mode == "facing":
                mask[ny, nx, d] = True
            else:
                mask[ny, nx, :] = True
    return mask


def field_for(cost: np.ndarray, goals: Iterable[Coord], mode: Mode) -> np.ndarray:
    return distance_field(cost, goal_mask(cost.shape, goals, mode))  # type: ignore[arg-type]


def _successors(agent_pos: Coord, d: int, cost: np.ndarray):
    """(action, pos, dir, step_cost) for the three movement actions, in tie-break order."""
    h, w = cost.shape
    dx, dy = DIR_VECS[d]
    nx, ny = agent_pos[0] + dx, agent_pos[1] + dy
    if 0 <= nx < w and 0 <= ny < h and cost[ny, nx] >= 0:
        yield Action.FORWARD, (nx, ny), d, 1 + int(cost[ny, nx])
    yield Action.LEFT, agent_pos, (d + 3) % 4, 1
    yield Action.RIGHT, agent_pos, (d + 1) % 4, 1


def best_action(field: np.ndarray, cost: np.ndarray, pos: Coord, d: int) -> Optional[Action]:
    """First action of the lexicographically smallest optimal path; None if already at a goal."""
    here = int(field[pos[1], pos[0], d])
    if here == 0:
        return None
    if here >= INF:
        raise UnreachableGoal(f"no path from {pos}")
    for act, npos, nd, c in _successors(pos, d, cost):
        if c + int(field[npos[1], npos[0], nd]) == here:
            return act
    raise AssertionError("distance field is inconsistent")


def extract_path(field: np.ndarray, cost: np.ndarray, agent: AgentState) -> tuple[list[Action], list[Coord]]:
    """Walk the field greedily.  Returns the movement actions and the cells entered."""
    pos, d = agent.pos, int(agent.direction)
    actions: list[Action] = []
    cells: list[Coord] = []
    while True:
        act = best_action(field, cost, pos, d)
        if act is None:
            return actions, cells
        actions.append(act)
        if act is Action.FORWARD:
            dx, dy = DIR_VECS[d]
            pos = (pos[0] + dx, pos[1] + dy)
            cells.append(pos)
        elif act is Action.LEFT:
            d = (d + 3) % 4
        else:
            d = (d + 1) % 4


def plan_path(
    state: WorldState,
    goal: Coord | Iterable[Coord],
    mode: Mode = "adjacent_to",
    soft: bool = False,
) -> list[Action]:
    """Shortest movement-only action list to satisfy `mode` relative to goal.

    Every turn and forward costs 1.  With soft=True closed doors and movable
    objects may be crossed (the returned list then omits the clearing actions).
    Raises UnreachableGoal when no route exists.
    """
    goals = [goal] if isinstance(goal, tuple) and len(goal) == 2 and isinstance(goal[0], (int, np.integer)) else list(goal)  # type: ignore[arg-type]
    for g in goals:
        if not state.layout.in_grid(g):
            raise ValueError(f"goal {g} outside the grid")
    cost = cost_grid(state, soft=soft)
    field = field_for(cost, goals, mode)
    agent = state.agent
    if field[agent.pos[1], agent.pos[0], agent.direction] >= INF:
        raise UnreachableGoal(f"{goals} unreachable from {agent.pos}")
    return extract_path(field, cost, agent)[0]


def reachable_cells(state: WorldState, start: Coord, soft: bool = False) -> np.ndarray:
    """Bool (H, W) mask of cells whose standing states can reach `start` (symmetric for unit moves)."""
    cost = cost_grid(state, soft=soft)
    field = field_for(cost, [start], "onto")
    return (field < INF).any(axis=2)
