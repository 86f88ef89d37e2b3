"""Prompts, response parsing, environment-backed scoring and metric aggregation."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Sequence, Union

from .datagen import DecomposeRow, PlanRow, PredictRow, Row, gen_decompose, gen_plan, gen_predict, task_of
from .formatters import parse_structured
from .grid import Action, Coord, WorldState, replay
from .levels import EnvInstance, PlanEnvSpec, resolve_level
from .missions import parse_mission
from .omnibot import Subgoal, anticipatory_stack, parse_subgoal_line, solve, stack_to_lines
from .rng import derive_seed

STRATEGIES = ("zero_shot", "few_shot", "cot", "tot")
N_EXEMPLARS = 3
# SA classes: inclusive (low, high); high=None is open-ended
DEFAULT_SA_BUCKETS: tuple[tuple[int, Optional[int]], ...] = ((0, 2), (3, 6), (7, 9), (10, None))


def row_id(row: Row) -> str:
    return f"{row.level_name}#{row.seed}"


# --- instances behind rows ----------------------------------------------------


@lru_cache(maxsize=4096)
def _restore(env_description: str) -> tuple[WorldState, str]:
    parsed = parse_structured(env_description)
    return parsed.state, parsed.mission


def instance_for_row(row: Row) -> EnvInstance:
    state, mission = _restore(row.env_description)
    return EnvInstance(row.level_name, row.seed, state, parse_mission(mission))


# --- prompts ------------------------------------------------------------------

_TASK_TEXT = {
    "predict": (
        "Task: the agent starts from the pose given above and executes the action sequence below, in order. "
        "Actions that cannot be carried out (for example moving into a wall or an object) leave the agent where it is. "
        "Work out where the agent ends up.\n"
        "Answer format: finish your reply with the final pose written as ((x, y), d), where d is the facing "
        "direction index (0 = east, 1 = south, 2 = west, 3 = north)."
    ),
    "plan": (
        "Task: produce a sequence of actions that brings the agent to a cell directly next to (sharing an edge with) "
        "the target cell below. Only left, right and forward are needed.\n"
        "Answer format: finish your reply with the actions separated by commas, e.g. left, forward, forward."
    ),
    "decompose": (
        "Task: break the mission into a sequence of subgoals for a low-level controller. Available subgoals:\n"
        "(GoNextToSubgoal, (x, y)) moves the agent next to cell (x, y) and turns it to face that cell.\n"
        "(OpenSubgoal) toggles the door the agent is facing (a locked door needs the matching key in hand).\n"
        "(PickupSubgoal) picks up the object the agent is facing.\n"
        "(DropSubgoal) drops the carried object onto the cell the agent is facing.\n"
        "Answer format: list the subgoals one per line, first subgoal first, between a line reading <START> "
        "and a line reading <END>. Nothing else may appear between those two lines."
    ),
}

_STRATEGY_TEXT = {
    "zero_shot": "",
    "few_shot": "",
    "cot": "Reason it through step by step, keeping track of the agent's position and direction, then give the answer.",
    "tot": (
        "Explore three different candidate solutions. For each one, check it against the environment and note "
        "where it could go wrong. Keep the candidate that survives the checks and give it as the answer."
    ),
}


def _task_query(row: Row) -> str:
    if isinstance(row, PredictRow):
        return "Action sequence: " + ", ".join(row.action_sequence)
    if isinstance(row, PlanRow):
        x, y = row.target_subgoal
        return f"Target cell: ({x}, {y})"
    return f"Mission: {row.mission}"


def _answer_for(row: Row, line_order: str = "execution") -> str:
    """The expert's answer in the requested output format."""
    if isinstance(row, PredictRow):
        (x, y), d = row.target_state["position"], row.target_state["direction"]
        return f"Final state: (({x}, {y}), {d})"
    if isinstance(row, PlanRow):
        return ", ".join(row.expert_action_sequence)
    stack = anticipatory_stack(instance_for_row(row))
    lines = stack_to_lines(stack)
    if line_order == "stack":
        lines = lines[::-1]
    return "\n".join(["<START>", *lines, "<END>"])


def oracle_answer(row: Row, line_order: str = "execution") -> str:
    return _answer_for(row, line_order)


EXEMPLAR_SEED_BASE = 1 << 31


def exemplar_seeds(level_name: str, n: int = N_EXEMPLARS) -> list[int]:
    """Seeds outside the [0, 2**31) evaluation range, so exemplars never coincide with an evaluated row."""
    out: list[int] = []
    i = 0
    while len(out) < n:
        s = EXEMPLAR_SEED_BASE + derive_seed(0, "exemplar", level_name, i) % EXEMPLAR_SEED_BASE
        if s not in out:
            out.append(s)
        i += 1
    return out


@lru_cache(maxsize=256)
def exemplars(task: str, level_name: str, n: int = N_EXEMPLARS) -> tuple[Row, ...]:
    rows: list[Row] = []
    for s in exemplar_seeds(level_name, n):
        if task == "predict":
            rows.append(gen_predict(level_name, s))
        elif task == "plan":
            rows.append(gen_plan(PlanEnvSpec.from_name(level_name), s))
        else:
            rows.append(gen_decompose(level_name, s))
    return tuple(rows)


def _exemplar_block(row: Row, line_order: str) -> str:
    parts = []
    for i, ex in enumerate(exemplars(task_of(row), row.level_name), 1):
        parts.append(
            f"### Example {i}\n{ex.env_description}\n{_task_query(ex)}\nAnswer:\n{_answer_for(ex, line_order)}\n"
        )
    return "\n".join(parts)


def build_prompt(row: Row, strategy: str = "zero_shot", line_order: str = "execution") -> str:
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    task = task_of(row)
    task_text = _TASK_TEXT[task]
    if task == "decompose" and line_order == "stack":
        task_text = task_text.replace("first subgoal first", "last subgoal first (the final line runs first)")
    sections = []
    if strategy == "few_shot":
        sections.append(_exemplar_block(row, line_order))
        sections.append("### Your turn")
    sections.append(row.env_description)
    sections.append(task_text)
    if _STRATEGY_TEXT[strategy]:
        sections.append(_STRATEGY_TEXT[strategy])
    sections.append(_task_query(row))
    return "\n".join(sections) + "\n"


# --- parsing ------------------------------------------------------------------


@dataclass(frozen=True)
class ParsedResponse:
    task: str
    ok: bool
    value: Any = None
    error: Optional[str] = None


_POSE_RE = re.compile(r"\(\s*\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*,\s*([0-3])\s*\)")
_ACTION_RE = re.compile(
    r"\b(?:(?:turn\s+)?(left|right)|(?:move\s+|go\s+)?(forward)|(pick[\s-]*up)|(drop)|(toggle))\b",
    re.IGNORECASE,
)
# what may sit between two actions of one block: separators, list markers, quotes, brackets
_GAP_RE = re.compile(r"^[\s,;\[\]\(\)'\"`*\-.>0-9]*$")


def _action_word(m: re.Match) -> str:
    for g in m.groups():
        if g:
            w = re.sub(r"[\s-]", "", g.lower())
            return "pickup" if w == "pickup" else w
    raise AssertionError  # pragma: no cover


def parse_predict(text: str) -> ParsedResponse:
    matches = list(_POSE_RE.finditer(text or ""))
    if not matches:
        return ParsedResponse("predict", False, error="no ((x, y), d) pattern")
    x, y, d = matches[-1].groups()
    return ParsedResponse("predict", True, {"position": [int(x), int(y)], "direction": int(d)})


def parse_plan(text: str) -> ParsedResponse:
    """The last run of action words joined only by separators."""
    matches = list(_ACTION_RE.finditer(text or ""))
    if not matches:
        return ParsedResponse("plan", False, error="no action words")
    block = [matches[-1]]
    for m in reversed(matches[:-1]):
        gap = text[m.end() : block[-1].start()]
        if not _GAP_RE.match(gap):
            break
        block.append(m)
    actions = [Action(_action_word(m)) for m in reversed(block)]
    return ParsedResponse("plan", True, actions)


def parse_decompose(text: str, line_order: str = "execution") -> ParsedResponse:
    """Subgoals between the final <START>/<END> pair, returned as a stack (top = last element).

    line_order="execution": the first line runs first.  line_order="stack": the last line runs first.
    """
    text = text or ""
    end = text.rfind("<END>")
    start = text.rfind("<START>", 0, end) if end >= 0 else -1
    if end < 0 or start < 0:
        return ParsedResponse("decompose", False, error="no <START>/<END> block")
    body = text[start + len("<START>") : end]
    subgoals: list[Subgoal] = []
    for line in body.splitlines():
        if not line.strip():
            continue
        try:
            subgoals.append(parse_subgoal_line(line))
        except ValueError as exc:
            return ParsedResponse("decompose", False, error=str(exc))
    stack = subgoals[::-1] if line_order == "execution" else subgoals
    return ParsedResponse("decompose", True, stack)


def parse_response(task: str, text: Optional[str], line_order: str = "execution") -> ParsedResponse:
    if task == "predict":
        return parse_predict(text or "")
    if task == "plan":
        return parse_plan(text or "")
    if task == "decompose":
        return parse_decompose(text or "", line_order)
    raise ValueError(f"unknown task {task!r}")


# --- per-episode scoring -------------------------------------------------------


@dataclass
class EpisodeRecord:
    task: str
    row_id: str
    level: str
    difficulty: str
    skills: list[str]
    parse_ok: bool
    success: bool
    error: Optional[str] = None  # "parse" or a provider error class name
    detail: Optional[str] = None
    # predict
    position_match: Optional[bool] = None
    distance: Optional[int] = None
    predicted: Optional[dict] = None
    target: Optional[dict] = None
    # plan
    llm_len: Optional[int] = None
    expert_len: Optional[int] = None
    efficiency: Optional[float] = None
    final_position: Optional[list[int]] = None
    # decompose
    added: Optional[int] = None
    limit: Optional[int] = None
    stack_len: Optional[int] = None

    def to_json(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "EpisodeRecord":
        return cls(**d)


def level_tags(level_name: str) -> tuple[str, str, list[str]]:
    """(short level name, difficulty slice, skill tags)."""
    try:
        r = resolve_level(level_name)
        return r.name, r.difficulty, list(r.skills)
    except KeyError:
        pass
    try:
        spec = PlanEnvSpec.from_name(level_name)
        return level_name, spec.size, []
    except ValueError:
        return level_name, "unknown", []


def _base(row: Row, task: str) -> dict[str, Any]:
    level, diff, skills = level_tags(row.level_name)
    return {"task": task, "row_id": row_id(row), "level": level, "difficulty": diff, "skills": skills}


def failure_record(row: Row, error: str, detail: Optional[str] = None) -> EpisodeRecord:
    task = task_of(row)
    rec = EpisodeRecord(**_base(row, task), parse_ok=False, success=False, error=error, detail=detail)
    if isinstance(row, DecomposeRow):
        rec.limit = row.help_count
    if isinstance(row, PlanRow):
        rec.expert_len = len(row.expert_action_sequence)
    if isinstance(row, PredictRow):
        rec.target = row.target_state
    return rec


def manhattan(a: Sequence[int], b: Sequence[int]) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def eval_predict_one(row: PredictRow, parsed: ParsedResponse) -> EpisodeRecord:
    if not parsed.ok:
        return failure_record(row, "parse", parsed.error)
    pred = parsed.value
    tgt = row.target_state
    pos_ok = list(pred["position"]) == list(tgt["position"])
    ok = pos_ok and pred["direction"] == tgt["direction"]
    return EpisodeRecord(
        **_base(row, "predict"),
        parse_ok=True,
        success=ok,
        position_match=pos_ok,
        distance=manhattan(pred["position"], tgt["position"]),
        predicted=pred,
        target=tgt,
    )


def eval_predict(rows: Sequence[PredictRow], responses: Sequence[Optional[str]]) -> list[EpisodeRecord]:
    if len(rows) != len(responses):
        raise ValueError("rows and responses are not aligned")
    return [eval_predict_one(r, parse_predict(t or "")) for r, t in zip(rows, responses)]


def plan_step_budget(state: WorldState) -> int:
    return 8 * state.layout.width * state.layout.height


def eval_plan(row: PlanRow, actions: Union[ParsedResponse, Sequence[Action], None]) -> EpisodeRecord:
    if isinstance(actions, ParsedResponse):
        if not actions.ok:
            return failure_record(row, "parse", actions.error)
        actions = actions.value
    if actions is None:
        return failure_record(row, "parse", "no actions")
    actions = [Action(a) for a in actions]
    inst = instance_for_row(row)
    expert_len = len(row.expert_action_sequence)
    budget = plan_step_budget(inst.state)
    final = replay(inst.state, actions[:budget])[-1].agent.pos
    within = len(actions) <= budget
    ok = within and manhattan(final, row.target_subgoal) == 1
    eff: Optional[float] = None
    if ok:
        eff = 1.0 if expert_len == len(actions) else expert_len / len(actions)
    return EpisodeRecord(
        **_base(row, "plan"),
        parse_ok=True,
        success=ok,
        detail=None if within else "step budget exceeded",
        llm_len=len(actions),
        expert_len=expert_len,
        efficiency=eff,
        final_position=[final[0], final[1]],
    )


def eval_decompose(row: DecomposeRow, stack: Union[ParsedResponse, Sequence[Subgoal], None]) -> EpisodeRecord:
    if isinstance(stack, ParsedResponse):
        if not stack.ok:
            return failure_record(row, "parse", stack.error)
        stack = stack.value
    if stack is None:
        return failure_record(row, "parse", "no stack")
    trace = solve(instance_for_row(row), init=list(stack))
    return EpisodeRecord(
        **_base(row, "decompose"),
        parse_ok=True,
        success=trace.success,
        detail=trace.failure,
        added=trace.added_subgoals,
        limit=row.help_count,
        stack_len=len(stack),
    )


def score(row: Row, text: Optional[str], line_order: str = "execution") -> EpisodeRecord:
    task = task_of(row)
    parsed = parse_response(task, text, line_order)
    if task == "predict":
        return eval_predict_one(row, parsed)  # type: ignore[arg-type]
    if task == "plan":
        return eval_plan(row, parsed)  # type: ignore[arg-type]
    return eval_decompose(row, parsed)  # type: ignore[arg-type]


# --- aggregation ----------------------------------------------------------------


def _mean(xs: Sequence[float]) -> Optional[float]:
    # fsum: correctly rounded, so the result does not depend on episode order
    return math.fsum(xs) / len(xs) if xs else None


def success_at(rec: EpisodeRecord, k: int) -> bool:
    return rec.success and rec.added is not None and rec.added <= k


def record_aci(rec: EpisodeRecord, limit: Optional[int] = None, convention: str = "left") -> float:
    """(1/limit) * sum of the success@k step function; PR credit when limit is 0.

    convention="left" sums k = 0..limit-1, "right" sums k = 1..limit.
    """
    lim = rec.limit if limit is None else limit
    if lim is None:
        raise ValueError("record has no limit")
    if lim <= 0:
        return 1.0 if success_at(rec, 0) else 0.0
    ks = range(lim) if convention == "left" else range(1, lim + 1)
    hits = sum(success_at(rec, k) for k in ks)
    return 1.0 if hits == lim else hits / lim


def sa_bucket(limit: int, buckets: Sequence[tuple[int, Optional[int]]] = DEFAULT_SA_BUCKETS) -> Optional[str]:
    for lo, hi in buckets:
        if limit >= lo and (hi is None or limit <= hi):
            return f"{lo}+" if hi is None else f"{lo}-{hi}"
    return None


def aggregate_decompose(
    records: Sequence[EpisodeRecord],
    limits: Optional[Sequence[int]] = None,
    convention: str = "left",
    buckets: Optional[Sequence[tuple[int, Optional[int]]]] = DEFAULT_SA_BUCKETS,
) -> dict[str, Any]:
    if not records:
        raise ValueError("no records to aggregate")
    lims = [r.limit for r in records] if limits is None else list(limits)
    if any(lim is None for lim in lims):
        raise ValueError("every record needs a limit")
    n = len(records)
    max_k = max(max(lims), 0)  # type: ignore[type-var]
    out: dict[str, Any] = {
        "n": n,
        "CR": _mean([float(r.success) for r in records]),
        "PR": _mean([float(success_at(r, 0)) for r in records]),
        "ACI": _mean([record_aci(r, lim, convention) for r, lim in zip(records, lims)]),
        "SR": [_mean([float(success_at(r, k)) for r in records]) for k in range(max_k + 1)],
        "parse_failures": sum(not r.parse_ok for r in records),
        "aci_convention": convention,
    }
    if buckets:
        by: dict[str, list[int]] = defaultdict(list)
        for i, lim in enumerate(lims):
            b = sa_bucket(lim, buckets)  # type: ignore[arg-type]
            if b is not None:
                by[b].append(i)
        classes = {}
        for lo, hi in buckets:
            name = f"{lo}+" if hi is None else f"{lo}-{hi}"
            if by.get(name):
                sub = [records[i] for i in by[name]]
                sub_l = [lims[i] for i in by[name]]
                classes[name] = aggregate_decompose(sub, sub_l, convention, buckets=None)  # type: ignore[arg-type]
        out["by_sa"] = classes
    return out


def aggregate_predict(records: Sequence[EpisodeRecord], parse_failure_distance: Optional[int] = None) -> dict[str, Any]:
    """parse_failure_distance=None leaves parse failures out of the distance means."""
    if not records:
        raise ValueError("no records to aggregate")
    dists = []
    wrong = []
    for r in records:
        d = r.distance if r.parse_ok else parse_failure_distance
        if d is None:
            continue
        dists.append(float(d))
        if not r.success:
            wrong.append(float(d))
    return {
        "n": len(records),
        "success_rate": _mean([float(r.success) for r in records]),
        "position_rate": _mean([float(bool(r.position_match)) for r in records]),
        "mean_manhattan": _mean(dists),
        "mean_manhattan_incorrect": _mean(wrong),
        "parse_failures": sum(not r.parse_ok for r in records),
    }


def aggregate_plan(records: Sequence[EpisodeRecord]) -> dict[str, Any]:
    if not records:
        raise ValueError("no records to aggregate")
    effs = [r.efficiency for r in records if r.success and r.efficiency is not None]
    return {
        "n": len(records),
        "success_rate": _mean([float(r.success) for r in records]),
        "efficiency_ratio": _mean(effs),  # type: ignore[arg-type]
        "parse_failures": sum(not r.parse_ok for r in records),
    }


def aggregate(records: Sequence[EpisodeRecord], **kw: Any) -> dict[str, Any]:
    task = records[0].task
    if any(r.task != task for r in records):
        raise ValueError("mixed tasks in one aggregation")
    if task == "predict":
        return aggregate_predict(records, kw.get("parse_failure_distance"))
    if task == "plan":
        return aggregate_plan(records)
    return aggregate_decompose(records, convention=kw.get("convention", "left"))


def slices(records: Sequence[EpisodeRecord], **kw: Any) -> dict[str, dict[str, Any]]:
    groups: dict[str, dict[str, list[EpisodeRecord]]] = {"level": {}, "difficulty": {}, "skill": {}}
    for r in records:
        groups["level"].setdefault(r.level, []).append(r)
        groups["difficulty"].setdefault(r.difficulty, []).append(r)
        for s in r.skills:
            groups["skill"].setdefault(s, []).append(r)
    return {kind: {k: aggregate(v, **kw) for k, v in sorted(g.items())} for kind, g in groups.items()}


@dataclass
class EvalReport:
    task: str
    model: str
    strategy: str
    records: list[EpisodeRecord]
    options: dict[str, Any] = field(default_factory=dict)

    @property
    def overall(self) -> dict[str, Any]:
        return aggregate(self.records, **self.options)

    def sliced(self) -> dict[str, dict[str, Any]]:
        return slices(self.records, **self.options)

    def provider_errors(self) -> int:
        return sum(r.error not in (None, "parse") for r in self.records)

    def aggregate_json(self) -> dict[str, Any]:
        return {
            "task": self.task,
            "model": self.model,
            "strategy": self.strategy,
            "options": self.options,
            "overall": self.overall,
            "slices": self.sliced(),
            "provider_errors": self.provider_errors(),
        }

    def write(self, out_dir: Union[str, os.PathLike]) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{self.task}_{self.model}_{self.strategy}"
        paths = {
            "records": out / f"{stem}.records.jsonl",
            "aggregate": out / f"{stem}.aggregate.json",
            "summary": out / f"{stem}.summary.csv",
        }
        with open(paths["records"], "w", encoding="utf-8") as fh:
            for r in self.records:
                fh.write(json.dumps(r.to_json()) + "\n")
        with open(paths["aggregate"], "w", encoding="utf-8") as fh:
            json.dump(self.aggregate_json(), fh, indent=2)
            fh.write("\n")
        paths["summary"].write_text(summary_table({self.model: self}), encoding="utf-8")
        return paths


_HEADLINE = {"predict": ("success_rate",), "plan": ("success_rate",), "decompose": ("CR", "PR", "ACI")}


def summary_table(reports: dict[str, EvalReport]) -> str:
    """CSV: one line per difficulty slice, one column group per model."""
    if not reports:
        return ""
    task = next(iter(reports.values())).task
    metrics = _HEADLINE[task]
    diffs: list[str] = []
    for rep in reports.values():
        for d in rep.sliced()["difficulty"]:
            if d not in diffs:
                diffs.append(d)
    order = ["Easy", "Medium", "Hard", "VeryHard", "Small", "Large", "Ultra"]
    diffs.sort(key=lambda d: order.index(d) if d in order else len(order))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["difficulty"] + [f"{m}:{k}" for m in reports for k in metrics])

    def fmt(v: Optional[float]) -> str:
        return "" if v is None else f"{v:.3f}"

    for d in diffs:
        row = [d]
        for rep in reports.values():
            agg = rep.sliced()["difficulty"].get(d)
            row += [fmt(agg[k]) if agg else "" for k in metrics]
        w.writerow(row)
    row = ["all"]
    for rep in reports.values():
        row += [fmt(rep.overall[k]) for k in metrics]
    w.writerow(row)
    return buf.getvalue()


# --- evaluation loop ----------------------------------------------------------------

CompleteFn = Callable[[str, str, Row], str]


def run_eval(
    rows: Sequence[Row],
    answers: dict[str, Any],
    model: str,
    strategy: str,
    line_order: str = "execution",
    options: Optional[dict[str, Any]] = None,
) -> EvalReport:
    """Score rows against completions keyed by row id.

    `answers[row_id]` is either the response text or an exception raised by the provider.
    """
    if not rows:
        raise ValueError("empty dataset")
    task = task_of(rows[0])
    records = []
    for row in rows:
        ans = answers.get(row_id(row))
        if isinstance(ans, BaseException):
            records.append(failure_record(row, type(ans).__name__, str(ans)))
        else:
            records.append(score(row, ans, line_order))
    return EvalReport(task, model, strategy, records, dict(options or {}))


def oracle_decompositions(rows: Iterable[DecomposeRow]) -> dict[str, list[Subgoal]]:
    return {row_id(r): anticipatory_stack(instance_for_row(r)) for r in rows}
