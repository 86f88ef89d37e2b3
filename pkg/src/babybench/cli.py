"""Command line entry point: generate, solve, eval, catalog, bench."""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from pathlib import Path
from typing import Optional, Sequence

from .client import AuthenticationError, AuditLog, ModelConfig, ModelError, complete_many, make_model
from .datagen import DatasetError, PrefixPolicy, TASKS, dataset_hash, generate_datasets, read_dataset, task_of
from .harness import STRATEGIES, build_prompt, row_id, run_eval
from .levels import LEVEL_NAMES, GenerationExhausted, PlanEnvSpec, generate, resolve_level
from .omnibot import parse_stack_text, solve, stack_label

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_PROVIDER = 0, 1, 2, 3


class UsageError(Exception):
    pass


def parse_seeds(text: str) -> list[int]:
    """'7', '0..99' (inclusive) or '1,5,9'."""
    out: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if ".." in part:
                a, b = part.split("..")
                lo, hi = int(a), int(b)
                if hi < lo:
                    raise UsageError(f"empty seed range {part!r}")
                out.extend(range(lo, hi + 1))
            elif part:
                out.append(int(part))
    except ValueError:
        raise UsageError(f"bad seed list {text!r}") from None
    if not out:
        raise UsageError("no seeds given")
    return out


def _levels(text: str) -> list[str]:
    if text == "all":
        return list(LEVEL_NAMES)
    names = [t.strip() for t in text.split(",") if t.strip()]
    try:
        return [resolve_level(n).name for n in names]
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def _histogram(values: Sequence[int]) -> str:
    c = Counter(values)
    return " ".join(f"{k}:{c[k]}" for k in sorted(c))


def cmd_generate(args: argparse.Namespace) -> int:
    seeds = parse_seeds(args.seeds)
    if args.task == "plan":
        if not args.size:
            raise UsageError("plan datasets need --size and --dists")
        try:
            levels = [PlanEnvSpec(args.size, args.dists).env_name]
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        levels = _levels(args.levels)
    policy = PrefixPolicy(full_prob=args.full_prob, fixed=args.prefix_len)
    try:
        summary = generate_datasets(args.task, levels, seeds, args.out, policy, args.count_init_drops, args.workers)
    except OSError as exc:
        print(f"error: cannot write dataset: {exc}", file=sys.stderr)
        return EXIT_IO
    for name, n in summary.files.items():
        print(f"{name}: {n} rows")
    for level, counts in summary.help_counts.items():
        print(f"help_count {level}: {_histogram(counts)} (max {max(counts)})")
    print(f"manifest: {Path(args.out) / 'manifest.json'}")
    return EXIT_OK


def print_trace(trace, out=None) -> None:
    out = out or sys.stdout
    events = trace.events
    print(f"Initial stack: {stack_label(events[0].stack)}", file=out)
    last = events[0].stack
    by_step: dict[int, list] = {}
    for ev in events[1:]:
        by_step[ev.step] = ev.stack
    for step in sorted(by_step):
        stack = by_step[step]
        if stack != last:
            print(f"Stack at step {step}: {stack_label(stack)}", file=out)
            last = stack
    status = "success" if trace.success else f"failure ({trace.failure})"
    print(f"Result: {status} after {trace.steps} steps, {trace.added_subgoals} subgoals added", file=out)
    print(f"Actions: {', '.join(a.value for a in trace.actions)}", file=out)


def cmd_solve(args: argparse.Namespace) -> int:
    try:
        inst = generate(args.level, args.seed)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    except GenerationExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    init = None
    if args.init_stack:
        src = args.init_stack
        p = Path(src)
        text = p.read_text(encoding="utf-8") if p.is_file() else src.replace("\\n", "\n")
        try:
            init = parse_stack_text(text, args.line_order)
        except ValueError as exc:
            raise UsageError(f"bad --init-stack: {exc}") from None
    trace = solve(inst, init=init, allow_additions=not args.no_additions, record_events=True)
    print(f"Level: {inst.env_name}  seed: {inst.seed}")
    print(f"Mission: {inst.mission.surface}")
    print_trace(trace)
    if args.json:
        print(json.dumps(trace.to_json()))
    return EXIT_OK if trace.success else 1


def _progress_path(out: Path, task: str, model: str, strategy: str) -> Path:
    return out / f"{task}_{model}_{strategy}.progress.jsonl"


def cmd_eval(args: argparse.Namespace) -> int:
    if args.strategy not in STRATEGIES:
        raise UsageError(f"unknown strategy {args.strategy!r}")
    try:
        rows = read_dataset(args.dataset)
    except OSError as exc:
        print(f"error: cannot read dataset: {exc}", file=sys.stderr)
        return EXIT_IO
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if not rows:
        print("error: dataset is empty", file=sys.stderr)
        return EXIT_IO
    if args.model_config:
        cfg = ModelConfig.from_file(args.model_config)
    elif args.model in ("oracle", "silent"):
        cfg = ModelConfig.local(args.model)
    else:
        raise UsageError("pass --model oracle|silent or --model-config FILE")
    if args.line_order != cfg.line_order:
        cfg = ModelConfig(**{**cfg.__dict__, "line_order": args.line_order})
    if args.limit:
        rows = rows[: args.limit]
    task = task_of(rows[0])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model_name = cfg.model.replace("/", "_")
    dhash = dataset_hash(rows)
    progress = _progress_path(out, task, model_name, args.strategy)

    done: dict[str, str] = {}
    if args.resume and progress.exists():
        for line in progress.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            e = json.loads(line)
            if (e["dataset"], e["model"], e["strategy"]) == (dhash, cfg.model, args.strategy):
                done[e["row_id"]] = e["response"]
    elif progress.exists():
        progress.unlink()

    todo = [(row_id(r), build_prompt(r, args.strategy, cfg.line_order), r) for r in rows if row_id(r) not in done]
    audit = AuditLog(out / "audit.jsonl")
    model = make_model(cfg, audit)
    fh = open(progress, "a", encoding="utf-8")

    def save(rid: str, ans) -> None:
        if isinstance(ans, str):
            fh.write(json.dumps({"dataset": dhash, "row_id": rid, "model": cfg.model, "strategy": args.strategy, "response": ans}) + "\n")
            fh.flush()

    try:
        batch = complete_many(model, todo, cfg.max_concurrency, on_result=save)
    except AuthenticationError as exc:
        print(f"error: authentication failed: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    finally:
        fh.close()
        model.close()
    answers = {**done, **batch.answers}
    options = {"convention": args.aci_convention}
    if args.parse_failure_distance is not None:
        options["parse_failure_distance"] = args.parse_failure_distance
    report = run_eval(rows, answers, model_name, args.strategy, cfg.line_order, options)
    paths = report.write(out)
    print(json.dumps(report.overall, indent=2))
    for k, p in paths.items():
        print(f"{k}: {p}")
    if batch.errors:
        print(f"error: {len(batch.errors)} requests failed (see {paths['records']})", file=sys.stderr)
        return EXIT_PROVIDER
    return EXIT_OK


def cmd_catalog(args: argparse.Namespace) -> int:
    from .docs import level_catalog_markdown

    text = level_catalog_markdown()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    from .bench import run_kernel_bench

    for line in run_kernel_bench(sizes=args.sizes, repeats=args.repeats):
        print(line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="babybench", description="Grid-world reasoning benchmark toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a task dataset")
    g.add_argument("--task", choices=TASKS, required=True)
    g.add_argument("--levels", default="all", help="'all' or comma-separated level names")
    g.add_argument("--seeds", default="0..99", help="e.g. 0..99 or 1,2,3")
    g.add_argument("--out", default="data")
    g.add_argument("--size", help="plan env size: small|medium|large|ultra")
    g.add_argument("--dists", type=int, default=0, help="plan env distractor count")
    g.add_argument("--full-prob", type=float, default=0.2, help="predict: probability of using the whole trace")
    g.add_argument("--prefix-len", type=int, default=None, help="predict: fixed prefix length")
    g.add_argument("--count-init-drops", action="store_true", help="decompose: count safety drops as help")
    g.add_argument("--workers", type=int, default=1)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run the expert and print the stack evolution")
    s.add_argument("--level", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--init-stack", help="subgoal lines (file path or text with \\n separators)")
    s.add_argument("--line-order", choices=("execution", "stack"), default="execution")
    s.add_argument("--no-additions", action="store_true")
    s.add_argument("--json", action="store_true", help="also print the trace as JSON")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("eval", help="evaluate a model on a dataset")
    e.add_argument("--dataset", required=True)
    e.add_argument("--model", default="oracle", help="local model: oracle|silent")
    e.add_argument("--model-config", help="JSON provider config")
    e.add_argument("--strategy", default="zero_shot", choices=STRATEGIES)
    e.add_argument("--out", default="reports")
    e.add_argument("--resume", action="store_true")
    e.add_argument("--limit", type=int, default=0)
    e.add_argument("--line-order", choices=("execution", "stack"), default="execution")
    e.add_argument("--aci-convention", choices=("left", "right"), default="left")
    e.add_argument("--parse-failure-distance", type=int, default=None)
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("catalog", help="print the level catalog as markdown")
    c.add_argument("--out")
    c.set_defaults(func=cmd_catalog)

    b = sub.add_parser("bench", help="time the numba and numpy distance kernels")
    b.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32])
    b.add_argument("--repeats", type=int, default=20)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
