import json

import pytest

from babybench.cli import EXIT_IO, EXIT_OK, EXIT_PROVIDER, EXIT_USAGE, main, parse_seeds
from babybench.datagen import read_dataset


def test_parse_seeds():
    assert parse_seeds("0..3") == [0, 1, 2, 3]
    assert parse_seeds("5,7..8") == [5, 7, 8]
    with pytest.raises(Exception):
        parse_seeds("9..1")


def test_generate_predict_all_levels(tmp_path, capsys):
    assert main(["generate", "--task", "predict", "--levels", "all", "--seeds", "0..1", "--out", str(tmp_path)]) == 0
    files = sorted(p.name for p in tmp_path.glob("predict_*.jsonl"))
    assert len(files) == 16 and (tmp_path / "manifest.json").exists()


def test_generate_plan_five_seeds(tmp_path):
    rc = main(["generate", "--task", "plan", "--size", "ultra", "--dists", "180", "--seeds", "0..4", "--out", str(tmp_path)])
    assert rc == 0
    (f,) = tmp_path.glob("plan_*.jsonl")
    assert len(read_dataset(f)) == 5


def test_generate_decompose_prints_census(tmp_path, capsys):
    rc = main(["generate", "--task", "decompose", "--levels", "BossLevel", "--seeds", "0..19", "--out", str(tmp_path)])
    assert rc == 0
    assert "help_count BossLevel:" in capsys.readouterr().out


def test_usage_errors(tmp_path, capsys):
    assert main(["generate", "--task", "predict", "--levels", "NoSuchLevel", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["generate", "--task", "nope"]) == EXIT_USAGE
    assert main(["generate", "--task", "plan", "--size", "small", "--dists", "99", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["eval", "--dataset", str(tmp_path / "missing.jsonl")]) == EXIT_IO


def test_solve_prints_stack_evolution(capsys):
    assert main(["solve", "--level", "UnblockPickup", "--seed", "0"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("Initial stack: [(DropSubgoal), (PickupSubgoal), (GoNextToSubgoal: blue key)") == 1
    assert "Stack at step" in out and "Result: success" in out


def test_solve_with_init_stack_and_no_additions(capsys):
    assert main(["solve", "--level", "GoToObj", "--seed", "0", "--no-additions"]) == EXIT_OK
    capsys.readouterr()
    # a stack that points at a wall corner cannot finish the mission
    rc = main(["solve", "--level", "GoToObj", "--seed", "0", "--init-stack", "(GoNextToSubgoal, (0, 0))", "--no-additions"])
    assert rc == 1
    assert main(["solve", "--level", "GoToObj", "--seed", "0", "--init-stack", "(Fly)"]) == EXIT_USAGE


def _dataset(tmp_path, task="decompose", extra=()):
    d = tmp_path / "data"
    main(["generate", "--task", task, "--levels", "GoTo", "--seeds", "0..3", "--out", str(d), *extra])
    return next(d.glob(f"{task}_*.jsonl"))


def test_eval_oracle_and_resume(tmp_path, capsys):
    ds = _dataset(tmp_path)
    out = tmp_path / "rep"
    assert main(["eval", "--dataset", str(ds), "--model", "oracle", "--out", str(out)]) == EXIT_OK
    agg = json.loads((out / "decompose_oracle_zero_shot.aggregate.json").read_text())
    assert agg["overall"]["CR"] == agg["overall"]["PR"] == agg["overall"]["ACI"] == 1.0
    audit_lines = (out / "audit.jsonl").read_text().count("\n")
    assert audit_lines == 4
    assert main(["eval", "--dataset", str(ds), "--model", "oracle", "--out", str(out), "--resume"]) == EXIT_OK
    # nothing left to ask the model
    assert (out / "audit.jsonl").read_text().count("\n") == audit_lines


def test_eval_few_shot_silent(tmp_path, capsys):
    ds = _dataset(tmp_path, "predict")
    out = tmp_path / "rep"
    assert main(["eval", "--dataset", str(ds), "--model", "silent", "--strategy", "few_shot", "--out", str(out)]) == 0
    agg = json.loads((out / "predict_silent_few_shot.aggregate.json").read_text())
    assert agg["overall"]["success_rate"] == 0.0 and agg["overall"]["parse_failures"] == 4


def test_eval_provider_error_exit_code(tmp_path, monkeypatch):
    ds = _dataset(tmp_path, "predict")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "x", "provider": "openai", "api_key_env": "BABYBENCH_TEST_UNSET_KEY"}))
    monkeypatch.delenv("BABYBENCH_TEST_UNSET_KEY", raising=False)
    assert main(["eval", "--dataset", str(ds), "--model-config", str(cfg), "--out", str(tmp_path / "r")]) == EXIT_PROVIDER


def test_catalog(capsys):
    assert main(["catalog"]) == 0
    assert "| BossLevel | VeryHard | 3x3 |" in capsys.readouterr().out
