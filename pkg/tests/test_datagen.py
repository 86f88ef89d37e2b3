import json

import pytest

from babybench.datagen import (
    DatasetError,
    DecomposeRow,
    PlanRow,
    PredictRow,
    PrefixPolicy,
    gen_decompose,
    gen_plan,
    gen_predict,
    generate_datasets,
    read_dataset,
    row_to_json,
    write_dataset,
)
from babybench.formatters import parse_structured
from babybench.grid import replay
from babybench.levels import LEVEL_NAMES, PlanEnvSpec, generate, generate_plan_env
from babybench.omnibot import solve
from oracles import bfs_distance, walkable_grid


def _replay_row(row: PredictRow):
    state = parse_structured(row.env_description).state
    assert [*state.agent.pos] == row.initial_state["position"]
    assert int(state.agent.direction) == row.initial_state["direction"]
    end = replay(state, row.action_sequence)[-1].agent
    return {"position": [*end.pos], "direction": int(end.direction)}


def test_predict_rows_replay():
    for level in LEVEL_NAMES:
        for seed in range(8):
            row = gen_predict(level, seed)
            assert _replay_row(row) == row.target_state


def test_full_and_zero_prefix():
    inst = generate("BossLevel", 4)
    trace = solve(inst)
    full = gen_predict("BossLevel", 4, PrefixPolicy(fixed=10**9))
    last = trace.states[-1].agent
    assert full.action_sequence == [a.value for a in trace.actions]
    assert full.target_state == {"position": [*last.pos], "direction": int(last.direction)}
    zero = gen_predict("BossLevel", 4, PrefixPolicy(fixed=0))
    assert zero.action_sequence == [] and zero.target_state == zero.initial_state


def test_prefix_policy_distribution():
    pol = PrefixPolicy()
    lens = [pol.sample(50, "GoTo", s) for s in range(2000)]
    assert all(1 <= n <= 50 for n in lens)
    full = sum(n == 50 for n in lens) / len(lens)
    # 0.2 forced-full plus the uniform draw's own 1/50
    assert 0.17 < full < 0.26
    assert pol.sample(0, "GoTo", 1) == 0


def test_plan_small_empty_room_matches_bfs():
    spec = PlanEnvSpec("Small", 0)
    for seed in range(20):
        row = gen_plan(spec, seed)
        state = parse_structured(row.env_description).state
        want = bfs_distance(walkable_grid(state), state.agent.pos, state.agent.direction, [tuple(row.target_subgoal)])
        assert len(row.expert_action_sequence) == want
        end = replay(state, row.expert_action_sequence)[-1].agent.pos
        assert abs(end[0] - row.target_subgoal[0]) + abs(end[1] - row.target_subgoal[1]) == 1


def test_plan_ultra_row():
    row = gen_plan(PlanEnvSpec("Ultra", 180), 0)
    assert row.level_name == "CustomBabyAI-GoToRedBall-Ultra-180Dists-v0"
    assert len(row.expert_action_sequence) > 0
    plan_ball = generate_plan_env(PlanEnvSpec("Ultra", 180), 0)
    assert tuple(row.target_subgoal) in {o.pos for o in plan_ball.state.objects if o.color == "red"}


def test_decompose_examples():
    # obstacle-free single room: nothing to add
    assert all(gen_decompose("GoToObj", s).help_count == 0 for s in range(20))
    row = gen_decompose("SynthSeq", 3)
    assert row.help_count == solve(generate("SynthSeq", 3)).added_subgoals
    assert row.mission == generate("SynthSeq", 3).mission.surface


def _mixed_rows(n):
    rows = []
    for i in range(n):
        level = LEVEL_NAMES[i % 16]
        kind = i % 3
        if kind == 0:
            rows.append(gen_predict(level, i))
        elif kind == 1:
            rows.append(gen_decompose(level, i))
        else:
            rows.append(gen_plan(PlanEnvSpec("Small", i % 8), i))
    return rows


def test_write_read_round_trip_1000(tmp_path):
    rows = _mixed_rows(1000)
    p = tmp_path / "mixed.jsonl"
    assert write_dataset(rows, p) == 1000
    assert read_dataset(p) == rows


def test_empty_dataset(tmp_path):
    p = tmp_path / "e.jsonl"
    write_dataset([], p)
    assert p.read_bytes() == b""
    assert read_dataset(p) == []


def test_schema_errors_name_row_and_field(tmp_path):
    good = row_to_json(gen_decompose("GoTo", 0))
    bad = dict(good)
    del bad["seed"]
    p = tmp_path / "bad.jsonl"
    p.write_text(json.dumps(good) + "\n" + json.dumps(bad) + "\n", encoding="utf-8")
    with pytest.raises(DatasetError) as exc:
        read_dataset(p)
    assert exc.value.row == 1 and exc.value.field == "seed"
    assert "seed" in str(exc.value)
    p.write_text("{not json\n", encoding="utf-8")
    with pytest.raises(DatasetError):
        read_dataset(p)
    wrong = dict(good, help_count="3")
    p.write_text(json.dumps(wrong) + "\n", encoding="utf-8")
    with pytest.raises(DatasetError, match="help_count"):
        read_dataset(p)


def test_generate_datasets_is_pure(tmp_path):
    a = generate_datasets("predict", ["GoTo", "Open"], range(5), tmp_path / "a")
    b = generate_datasets("predict", ["GoTo", "Open"], range(5), tmp_path / "b")
    assert a.files == b.files == {"predict_GoTo.jsonl": 5, "predict_Open.jsonl": 5}
    for name in a.files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["files"]["predict_GoTo.jsonl"]["rows"] == 5
    assert man["prng"] and man["version"]


def test_row_types_have_exact_fields():
    assert list(PredictRow.__dataclass_fields__) == [
        "level_name", "seed", "env_description", "initial_state", "action_sequence", "target_state"
    ]
    assert list(PlanRow.__dataclass_fields__) == [
        "level_name", "seed", "env_description", "initial_state", "target_subgoal", "expert_action_sequence"
    ]
    assert list(DecomposeRow.__dataclass_fields__) == [
        "level_name", "seed", "env_description", "initial_state", "mission", "help_count"
    ]
