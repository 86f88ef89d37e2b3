"""Markdown rendering of the level catalog."""

from __future__ import annotations

from .levels import PlanEnvSpec, catalog_rows

_COLUMNS = (
    "level", "difficulty", "rooms", "room_size", "distractors", "locked_room_prob",
    "locations", "unblocking", "implicit_unlock", "instructions", "connectors", "skills",
)


def level_catalog_markdown() -> str:
    lines = [
        "# Level catalog",
        "",
        "Generated by `babybench catalog`; tests check that this file matches the recipes in `levels.py`.",
        "",
        "| " + " | ".join(_COLUMNS) + " |",
        "|" + "|".join("---" for _ in _COLUMNS) + "|",
    ]
    for row in catalog_rows():
        lines.append("| " + " | ".join(str(row[c]) for c in _COLUMNS) + " |")
    lines += ["", "## Plan environments", "", "| size | grid | max distractors |", "|---|---|---|"]
    for size, n in PlanEnvSpec.SIZES.items():
        lines.append(f"| {size} | {n}x{n} | {PlanEnvSpec.CAPS[size]} |")
    return "\n".join(lines) + "\n"
