"""Hot path: shortest-path distance fields over (x, y, direction) states.

Costs: turning = 1, moving forward = 1 + enter_cost of the destination cell.
enter_cost < 0 marks a cell that can never be entered.

Two independent implementations are kept.  The numba one runs Dijkstra on the
reversed state graph; the numpy one iterates a vectorised Bellman-Ford
relaxation to a fixed point.  Set BABYBENCH_NO_NUMBA=1 to force the numpy path.
"""

from __future__ import annotations

import heapq
import os

import numpy as np

INF = np.int64(1) << 40
DX = np.array([1, 0, -1, 0], dtype=np.int64)
DY = np.array([0, 1, 0, -1], dtype=np.int64)

_FORCE_NUMPY = os.environ.get("BABYBENCH_NO_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


def distance_field_numpy(cost: np.ndarray, goal: np.ndarray) -> np.ndarray:
    """Cost-to-go from every state to the nearest goal state, via fixed-point relaxation."""
    h, w = cost.shape
    standable = cost >= 0
    dist = np.where(goal & standable[:, :, None], 0, INF).astype(np.int64)
    # forward successor of (x, y, d) is (x+dx, y+dy, d); pad the grid so shifts stay in range
    step_cost = np.where(standable, 1 + cost, INF).astype(np.int64)
    pad_cost = np.full((h + 2, w + 2), INF, dtype=np.int64)
    pad_cost[1:-1, 1:-1] = step_cost
    blocked = ~standable
    while True:
        pad = np.full((h + 2, w + 2, 4), INF, dtype=np.int64)
        pad[1:-1, 1:-1] = dist
        fwd = np.empty_like(dist)
        for d in range(4):
            dx, dy = int(DX[d]), int(DY[d])
            nb_cost = pad_cost[1 + dy : h + 1 + dy, 1 + dx : w + 1 + dx]
            nb_dist = pad[1 + dy : h + 1 + dy, 1 + dx : w + 1 + dx, d]
            fwd[:, :, d] = nb_cost + nb_dist
        turn = np.minimum(np.roll(dist, -1, axis=2), np.roll(dist, 1, axis=2)) + 1
        new = np.minimum(dist, np.minimum(fwd, turn))
        new[blocked] = INF
        np.minimum(new, INF, out=new)
        if np.array_equal(new, dist):
            return dist
        dist = new


def _dijkstra_py(cost, goal):
    h, w = cost.shape
    n = h * w * 4
    dist = np.full(n, INF, dtype=np.int64)
    heap = [(np.int64(0), np.int64(-1))]
    heap.pop()
    for y in range(h):
        for x in range(w):
            if cost[y, x] < 0:
                continue
            for d in range(4):
                if goal[y, x, d]:
                    s = (y * w + x) * 4 + d
                    dist[s] = 0
                    heap.append((np.int64(0), np.int64(s)))
    heapq.heapify(heap)
    while len(heap) > 0:
        du, s = heapq.heappop(heap)
        if du > dist[s]:
            continue
        d = s % 4
        cell = s // 4
        x = cell % w
        y = cell // w
        # p turned right into d, or turned left into d
        for pd in ((d + 3) % 4, (d + 1) % 4):
            p = cell * 4 + pd
            nd = du + 1
            if nd < dist[p]:
                dist[p] = nd
                heapq.heappush(heap, (nd, np.int64(p)))
        # p moved forward into (x, y)
        px = x - DX[d]
        py = y - DY[d]
        if 0 <= px < w and 0 <= py < h and cost[py, px] >= 0:
            p = (py * w + px) * 4 + d
            nd = du + 1 + cost[y, x]
            if nd < dist[p]:
                dist[p] = nd
                heapq.heappush(heap, (nd, np.int64(p)))
    return dist.reshape(h, w, 4)


if HAVE_NUMBA:
    _dijkstra_nb = numba.njit(cache=True, nogil=True)(_dijkstra_py)
else:  # pragma: no cover
    _dijkstra_nb = _dijkstra_py


def distance_field_numba(cost: np.ndarray, goal: np.ndarray) -> np.ndarray:
    return _dijkstra_nb(np.ascontiguousarray(cost, dtype=np.int64), np.ascontiguousarray(goal, dtype=np.bool_))


def backend() -> str:
    return "numpy" if (_FORCE_NUMPY or not HAVE_NUMBA) else "numba"


def distance_field(cost: np.ndarray, goal: np.ndarray) -> np.ndarray:
    """Dispatch to the configured backend.  Shapes: cost (H, W) int, goal (H, W, 4) bool."""
    if backend() == "numba":
        return distance_field_numba(cost, goal)
    return distance_field_numpy(np.asarray(cost, dtype=np.int64), np.asarray(goal, dtype=bool))
