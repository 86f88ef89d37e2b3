"""Acceptance suite: one test per criterion, each reported as a PASS/FAIL line.

The lines are printed in pytest's terminal summary (see conftest.py) and by
running this file directly.
"""

import random
import time
from contextlib import contextmanager

import numpy as np

from babybench.client import LocalModel, complete_many
from babybench.datagen import gen_decompose, gen_plan, gen_predict
from babybench.formatters import format_env, parse_structured
from babybench.grid import replay
from babybench.harness import (
    EpisodeRecord,
    aggregate_decompose,
    build_prompt,
    eval_decompose,
    eval_plan,
    eval_predict_one,
    ParsedResponse,
    manhattan,
    row_id,
    run_eval,
)
from babybench.levels import LEVEL_NAMES, PlanEnvSpec, generate
from babybench.missions import check_success
from babybench.omnibot import OPEN_SG, go, solve
from scenarios import DOOR, KEY, one_door_goto
from test_formatters import FIX, pinned_state
from test_navigation import check_against_bfs

RESULTS: dict[str, tuple[bool, str]] = {}

NOT_REPRODUCIBLE = (
    "N/A   commercial LLM result tables and figures: need paid API access; "
    "covered by the oracle and property suites, regenerable with `babybench eval --model-config`"
)


@contextmanager
def criterion(name: str):
    notes: list[str] = []
    try:
        yield notes
    except BaseException:
        RESULTS[name] = (False, "; ".join(notes))
        raise
    RESULTS[name] = (True, "; ".join(notes))


def report_lines() -> list[str]:
    lines = [f"{'PASS' if ok else 'FAIL'}  {name}" + (f" ({note})" if note else "") for name, (ok, note) in RESULTS.items()]
    return lines + [NOT_REPRODUCIBLE]


def test_solve_rate():
    with criterion("expert solve rate, 100 seeds x 16 levels, default stack, < 60 s") as notes:
        t0 = time.perf_counter()
        failures = []
        for level in LEVEL_NAMES:
            for seed in range(100):
                inst = generate(level, seed)
                tr = solve(inst)
                ok = tr.success and tr.steps <= tr.step_budget
                # judge the trace independently of the bot's own bookkeeping
                ok = ok and check_success(inst.mission, replay(inst.state, tr.actions))
                if not ok:
                    failures.append((level, seed))
        elapsed = time.perf_counter() - t0
        notes.append(f"1600 episodes, {len(failures)} failures, {elapsed:.1f} s")
        assert not failures, failures[:10]
        assert elapsed < 60


def test_replay_soundness():
    with criterion("replay soundness of Predict and Plan rows") as notes:
        n_pred = n_plan = 0
        for level in LEVEL_NAMES:
            for seed in range(25):
                row = gen_predict(level, seed)
                state = parse_structured(row.env_description).state
                end = replay(state, row.action_sequence)[-1].agent
                assert {"position": [*end.pos], "direction": int(end.direction)} == row.target_state
                n_pred += 1
        for spec in (PlanEnvSpec("Small", 7), PlanEnvSpec("Medium", 60), PlanEnvSpec("Large", 120), PlanEnvSpec("Ultra", 180)):
            for seed in range(25):
                row = gen_plan(spec, seed)
                state = parse_structured(row.env_description).state
                end = replay(state, row.expert_action_sequence)[-1].agent
                assert manhattan(end.pos, row.target_subgoal) == 1
                n_plan += 1
        notes.append(f"{n_pred} predict rows, {n_plan} plan rows")


def test_navigation_optimality():
    with criterion("navigation optimality vs BFS, 1000 random reachable instances up to 16x16") as notes:
        modes = ("adjacent_to", "facing", "onto")
        reachable = unreachable = 0
        seed = 0
        while reachable < 1000:
            if check_against_bfs(seed, modes[seed % 3]) is None:
                unreachable += 1
            else:
                reachable += 1
            seed += 1
        notes.append(f"0 length mismatches on {reachable}, {unreachable} unreachable goals agreed")


def _oracle_rows():
    return {
        "predict": [gen_predict(level, s) for level in LEVEL_NAMES for s in range(2)],
        "plan": [gen_plan(PlanEnvSpec(size, n), s) for size, n in (("Small", 3), ("Medium", 30), ("Ultra", 90)) for s in range(3)],
        "decompose": [gen_decompose(level, s) for level in LEVEL_NAMES for s in range(2)],
    }


def test_oracle_end_to_end():
    with criterion("oracle model scores 1.000, silent model scores 0 with parse failures") as notes:
        for task, rows in _oracle_rows().items():
            jobs = [(row_id(r), build_prompt(r), r) for r in rows]
            for kind in ("oracle", "silent"):
                answers = complete_many(LocalModel(kind), jobs, max_concurrency=2).answers
                rep = run_eval(rows, answers, kind, "zero_shot")
                o = rep.overall
                if kind == "oracle":
                    if task == "decompose":
                        assert o["CR"] == o["PR"] == o["ACI"] == 1.0
                    else:
                        assert o["success_rate"] == 1.0
                else:
                    assert not any(r.success for r in rep.records)
                    assert all(r.error == "parse" for r in rep.records)
            notes.append(f"{task} {len(rows)}")


def _aci_oracle(recs):
    # direct count of the left-step sum, no shared code with the harness
    total = 0.0
    for r in recs:
        if r.limit == 0:
            total += 1.0 if r.success and r.added == 0 else 0.0
        else:
            total += sum(1 for k in range(r.limit) if r.success and r.added <= k) / r.limit
    return total / len(recs)


def test_metric_laws():
    with criterion("metric laws on 10000 record sets, self-replay efficiency, Manhattan 0 iff position match") as notes:
        for i in range(10_000):
            rnd = random.Random(i)
            recs = [
                EpisodeRecord("decompose", f"r{j}", "GoTo", "Medium", [], True, rnd.random() < 0.6,
                              added=rnd.randint(0, 12), limit=rnd.randint(0, 12))
                for j in range(rnd.randint(1, 30))
            ]
            agg = aggregate_decompose(recs)
            assert agg["PR"] <= agg["ACI"] <= agg["CR"]
            assert all(a <= b for a, b in zip(agg["SR"], agg["SR"][1:]))
            assert abs(agg["ACI"] - _aci_oracle(recs)) < 1e-12
        for size, n in (("Small", 7), ("Medium", 60), ("Large", 120), ("Ultra", 180)):
            for seed in range(10):
                row = gen_plan(PlanEnvSpec(size, n), seed)
                rec = eval_plan(row, row.expert_action_sequence)
                assert rec.success and rec.efficiency == 1.0
        rng = np.random.default_rng(0)
        checked = 0
        for level in LEVEL_NAMES:
            row = gen_predict(level, 0)
            tgt = row.target_state
            for _ in range(60):
                dx, dy = (int(v) for v in rng.integers(-2, 3, size=2))
                pred = {"position": [tgt["position"][0] + dx, tgt["position"][1] + dy], "direction": int(rng.integers(4))}
                rec = eval_predict_one(row, ParsedResponse("predict", True, pred))
                assert (rec.distance == 0) == rec.position_match
                checked += 1
        notes.append(f"{checked} predict probes")


def test_worked_scenario():
    with criterion("one-door GoTo scenario: a=1 for [GoNextTo(key)], a=0 for the 3-subgoal stack"):
        row = gen_decompose("GoTo", 0)
        inst = one_door_goto()
        row.env_description = format_env(inst.state, inst.mission.surface)
        row.help_count = 1
        partial = eval_decompose(row, [go(KEY)])
        full = eval_decompose(row, [go(KEY), OPEN_SG, go(DOOR)])
        assert partial.success and partial.added == 1
        assert full.success and full.added == 0
        assert aggregate_decompose([partial])["CR"] == 1.0 and aggregate_decompose([partial])["PR"] == 0.0
        assert aggregate_decompose([full])["PR"] == 1.0


def test_aci_worked_value():
    with criterion("ACI worked value: success, a=2, limit=4 gives 0.5"):
        rec = EpisodeRecord("decompose", "r", "GoTo", "Medium", [], True, True, added=2, limit=4)
        assert aggregate_decompose([rec])["ACI"] == 0.5


def test_formatter_stability():
    with criterion("formatter byte stability and 1000-instance round trip") as notes:
        state, mission = pinned_state()
        first = format_env(state, mission)
        assert first == format_env(state, mission)
        assert first.encode("utf-8") == (FIX / "reference_structured.txt").read_bytes()
        n = 0
        for level in LEVEL_NAMES:
            for seed in range(63):
                inst = generate(level, seed)
                back = parse_structured(format_env(inst.state, inst.mission.surface))
                assert back.state == inst.state and back.mission == inst.mission.surface
                n += 1
        notes.append(f"{n} instances")


if __name__ == "__main__":
    import sys

    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except Exception:
                pass
    print("\n".join(report_lines()))
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
