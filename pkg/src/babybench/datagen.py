"""Dataset rows for the Predict, Plan and Decompose tasks, plus JSONL I/O and manifests."""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

from . import __version__
from .formatters import format as format_instance
from .grid import Action, AgentState, Direction, replay
from .levels import EnvInstance, PlanEnvSpec, generate, generate_plan_env, plan_target, resolve_level
from .navigation import plan_path
from .omnibot import solve
from .rng import Rng, derive_seed

TASKS = ("predict", "plan", "decompose")
PRNG_NAME = "xoshiro256** seeded through splitmix64; streams derived by FNV-1a label folding"


class DatasetError(ValueError):
    def __init__(self, message: str, row: Optional[int] = None, field_name: Optional[str] = None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if field_name is not None:
            where.append(f"field {field_name!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.row = row
        self.field = field_name


def pose_json(agent: AgentState) -> dict[str, Any]:
    return {"position": [agent.pos[0], agent.pos[1]], "direction": int(agent.direction)}


@dataclass
class PredictRow:
    level_name: str
    seed: int
    env_description: str
    initial_state: dict
    action_sequence: list[str]
    target_state: dict


@dataclass
class PlanRow:
    level_name: str
    seed: int
    env_description: str
    initial_state: dict
    target_subgoal: list[int]
    expert_action_sequence: list[str]


@dataclass
class DecomposeRow:
    level_name: str
    seed: int
    env_description: str
    initial_state: dict
    mission: str
    help_count: int


Row = Union[PredictRow, PlanRow, DecomposeRow]
ROW_TYPES = {"predict": PredictRow, "plan": PlanRow, "decompose": DecomposeRow}


@dataclass(frozen=True)
class PrefixPolicy:
    """How much of the expert trace a Predict row asks about.

    Default: uniform length in [1, L], replaced by the full trace with probability full_prob.
    `fixed` pins the length (clipped to L) and disables sampling.
    """

    full_prob: float = 0.2
    fixed: Optional[int] = None

    def sample(self, length: int, level: str, seed: int) -> int:
        if self.fixed is not None:
            return min(self.fixed, length)
        if length == 0:
            return 0
        rng = Rng(derive_seed(seed, "prefix", level))
        if rng.coin(self.full_prob):
            return length
        return rng.randint(1, length)


def _instance(level: str, seed: int) -> EnvInstance:
    return generate(level, seed)


def predict_from_instance(inst: EnvInstance, policy: PrefixPolicy = PrefixPolicy()) -> PredictRow:
    trace = solve(inst)
    k = policy.sample(len(trace.actions), inst.level, inst.seed)
    actions = trace.actions[:k]
    final = replay(inst.state, actions)[-1]
    return PredictRow(
        level_name=inst.env_name,
        seed=inst.seed,
        env_description=format_instance(inst),
        initial_state=pose_json(inst.state.agent),
        action_sequence=[a.value for a in actions],
        target_state=pose_json(final.agent),
    )


def gen_predict(level: str, seed: int, policy: PrefixPolicy = PrefixPolicy()) -> PredictRow:
    return predict_from_instance(_instance(level, seed), policy)


def gen_plan(spec: PlanEnvSpec, seed: int) -> PlanRow:
    inst = generate_plan_env(spec, seed)
    target = plan_target(inst)
    expert = plan_path(inst.state, target, "adjacent_to")
    return PlanRow(
        level_name=spec.env_name,
        seed=seed,
        env_description=format_instance(inst),
        initial_state=pose_json(inst.state.agent),
        target_subgoal=[target[0], target[1]],
        expert_action_sequence=[a.value for a in expert],
    )


def decompose_from_instance(inst: EnvInstance, count_init_drops: bool = False) -> DecomposeRow:
    trace = solve(inst, count_init_drops=count_init_drops)
    if not trace.success:  # pragma: no cover - generate() filters on this
        raise RuntimeError(f"expert failed on {inst.level}/{inst.seed}: {trace.failure}")
    return DecomposeRow(
        level_name=inst.env_name,
        seed=inst.seed,
        env_description=format_instance(inst),
        initial_state=pose_json(inst.state.agent),
        mission=inst.mission.surface,
        help_count=trace.added_subgoals,
    )


def gen_decompose(level: str, seed: int, count_init_drops: bool = False) -> DecomposeRow:
    return decompose_from_instance(_instance(level, seed), count_init_drops)


# --- schema + I/O -------------------------------------------------------------

_POSE_KEYS = ("position", "direction")


def _check_pose(v: Any, i: Optional[int], name: str) -> None:
    if not isinstance(v, dict) or set(v) != set(_POSE_KEYS):
        raise DatasetError("expected {position, direction}", i, name)
    p = v["position"]
    if not (isinstance(p, list) and len(p) == 2 and all(isinstance(c, int) and not isinstance(c, bool) for c in p)):
        raise DatasetError("position must be [x, y] integers", i, name)
    if v["direction"] not in (0, 1, 2, 3) or isinstance(v["direction"], bool):
        raise DatasetError("direction must be 0..3", i, name)


def _check_actions(v: Any, i: Optional[int], name: str) -> None:
    valid = {a.value for a in Action}
    if not isinstance(v, list) or any(a not in valid for a in v):
        raise DatasetError("expected a list of action words", i, name)


_SCHEMA: dict[str, dict[str, Any]] = {
    "predict": {
        "level_name": str,
        "seed": int,
        "env_description": str,
        "initial_state": _check_pose,
        "action_sequence": _check_actions,
        "target_state": _check_pose,
    },
    "plan": {
        "level_name": str,
        "seed": int,
        "env_description": str,
        "initial_state": _check_pose,
        "target_subgoal": "coord",
        "expert_action_sequence": _check_actions,
    },
    "decompose": {
        "level_name": str,
        "seed": int,
        "env_description": str,
        "initial_state": _check_pose,
        "mission": str,
        "help_count": int,
    },
}


def detect_task(d: dict) -> str:
    if "action_sequence" in d:
        return "predict"
    if "expert_action_sequence" in d or "target_subgoal" in d:
        return "plan"
    if "help_count" in d or "mission" in d:
        return "decompose"
    raise DatasetError("cannot tell which task this row belongs to")


def validate_row(d: Any, task: Optional[str] = None, index: Optional[int] = None) -> str:
    if not isinstance(d, dict):
        raise DatasetError("row is not an object", index)
    task = task or detect_task(d)
    schema = _SCHEMA[task]
    for name, check in schema.items():
        if name not in d:
            raise DatasetError("missing", index, name)
        v = d[name]
        if check is str or check is int:
            if not isinstance(v, check) or isinstance(v, bool):
                raise DatasetError(f"expected {check.__name__}", index, name)
        elif check == "coord":
            if not (isinstance(v, list) and len(v) == 2 and all(isinstance(c, int) for c in v)):
                raise DatasetError("expected [x, y]", index, name)
        else:
            check(v, index, name)
    extra = set(d) - set(schema)
    if extra:
        raise DatasetError(f"unexpected fields {sorted(extra)}", index)
    if task == "decompose" and d["help_count"] < 0:
        raise DatasetError("must be non-negative", index, "help_count")
    return task


def row_from_json(d: dict, task: Optional[str] = None, index: Optional[int] = None) -> Row:
    task = validate_row(d, task, index)
    return ROW_TYPES[task](**d)


def row_to_json(row: Row) -> dict:
    return asdict(row)


def task_of(row: Row) -> str:
    for name, cls in ROW_TYPES.items():
        if isinstance(row, cls):
            return name
    raise TypeError(type(row))


def write_dataset(rows: Iterable[Row], path: Union[str, os.PathLike]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row_to_json(row), ensure_ascii=False, separators=(", ", ": ")))
            fh.write("\n")
            n += 1
    return n


def read_dataset(path: Union[str, os.PathLike], task: Optional[str] = None) -> list[Row]:
    rows: list[Row] = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"invalid JSON ({exc.msg})", i) from None
            rows.append(row_from_json(d, task, i))
    return rows


def file_sha256(path: Union[str, os.PathLike]) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# --- batch generation ---------------------------------------------------------


@dataclass
class GenerationSummary:
    task: str
    files: dict[str, int] = field(default_factory=dict)
    help_counts: dict[str, list[int]] = field(default_factory=dict)


def _one(task: str, level: str, seed: int, policy: PrefixPolicy, count_init_drops: bool) -> Row:
    if task == "predict":
        return gen_predict(level, seed, policy)
    if task == "decompose":
        return gen_decompose(level, seed, count_init_drops)
    return gen_plan(PlanEnvSpec.from_name(level), seed)


def _one_star(args: tuple) -> Row:
    return _one(*args)


def generate_rows(
    task: str,
    level: str,
    seeds: Sequence[int],
    policy: PrefixPolicy = PrefixPolicy(),
    count_init_drops: bool = False,
    workers: int = 1,
) -> list[Row]:
    jobs = [(task, level, s, policy, count_init_drops) for s in seeds]
    if workers <= 1:
        return [_one_star(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_one_star, jobs, chunksize=8))


def level_file_key(task: str, level: str) -> str:
    if task == "plan":
        return level
    return resolve_level(level).name


def generate_datasets(
    task: str,
    levels: Sequence[str],
    seeds: Sequence[int],
    out_dir: Union[str, os.PathLike],
    policy: PrefixPolicy = PrefixPolicy(),
    count_init_drops: bool = False,
    workers: int = 1,
) -> GenerationSummary:
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = GenerationSummary(task)
    manifest_files = {}
    for level in levels:
        key = level_file_key(task, level)
        rows = generate_rows(task, level, seeds, policy, count_init_drops, workers)
        path = out / f"{task}_{key}.jsonl"
        summary.files[path.name] = write_dataset(rows, path)
        manifest_files[path.name] = {"rows": len(rows), "sha256": file_sha256(path)}
        if task == "decompose":
            summary.help_counts[key] = [r.help_count for r in rows]  # type: ignore[union-attr]
    manifest = {
        "generator": "babybench",
        "version": __version__,
        "prng": PRNG_NAME,
        "task": task,
        "levels": list(levels),
        "seeds": {"first": min(seeds) if seeds else None, "last": max(seeds) if seeds else None, "count": len(seeds)},
        "policies": {
            "prefix_full_prob": policy.full_prob,
            "prefix_fixed": policy.fixed,
            "count_init_drops": count_init_drops,
            "env_description_style": "structured",
        },
        "files": manifest_files,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return summary


def dataset_hash(rows: Sequence[Row]) -> str:
    h = hashlib.sha256()
    for r in rows:
        h.update(json.dumps(row_to_json(r), sort_keys=True).encode())
        h.update(b"\n")
    return h.hexdigest()[:16]


def restore_instance(row: Row) -> tuple[Any, Any]:
    """(WorldState, mission text) rebuilt from a row's env_description."""
    from .formatters import parse_structured

    parsed = parse_structured(row.env_description)
    return parsed.state, parsed.mission


__all__ = [
    "PredictRow",
    "PlanRow",
    "DecomposeRow",
    "PrefixPolicy",
    "DatasetError",
    "gen_predict",
    "gen_plan",
    "gen_decompose",
    "write_dataset",
    "read_dataset",
    "generate_datasets",
    "Direction",
]
