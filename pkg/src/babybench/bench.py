"""Timing of the two distance-field backends on random grids."""

from __future__ import annotations

import time
from typing import Iterator, Sequence

import numpy as np

from ._kernels import distance_field_numba, distance_field_numpy


def random_problem(size: int, seed: int = 0, wall_frac: float = 0.2) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    cost = np.where(rng.random((size, size)) < wall_frac, -1, 0).astype(np.int64)
    doors = rng.random((size, size)) < 0.05
    cost[doors & (cost == 0)] = 1
    cost[0, :] = cost[-1, :] = cost[:, 0] = cost[:, -1] = -1
    goal = np.zeros((size, size, 4), dtype=bool)
    free = np.argwhere(cost >= 0)
    y, x = free[rng.integers(len(free))]
    goal[y, x, :] = True
    return cost, goal


def _time(fn, cost, goal, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(cost, goal)
        best = min(best, time.perf_counter() - t0)
    return best


def run_kernel_bench(sizes: Sequence[int] = (8, 16, 32), repeats: int = 20) -> Iterator[str]:
    # compile (or load from cache) before timing
    c, g = random_problem(8)
    distance_field_numba(c, g)
    yield f"{'size':>6} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}"
    for size in sizes:
        cost, goal = random_problem(size, seed=size)
        a = distance_field_numba(cost, goal)
        b = distance_field_numpy(cost, goal)
        if not np.array_equal(a, b):
            raise AssertionError(f"backends disagree on the {size}x{size} grid")
        t_nb = _time(distance_field_numba, cost, goal, repeats)
        t_np = _time(distance_field_numpy, cost, goal, repeats)
        yield f"{size:>6} {t_nb * 1e3:>10.3f} {t_np * 1e3:>10.3f} {t_np / t_nb:>7.1f}x"
