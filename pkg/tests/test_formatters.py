import json
from pathlib import Path

import pytest

from babybench.formatters import (
    FormatOptions,
    FormatParseError,
    format,
    format_env,
    parse_structured,
)
from babybench.grid import AgentState, Direction, DoorState, Layout, WorldObject, WorldState, step
from babybench.levels import LEVEL_NAMES, generate

FIX = Path(__file__).parent / "fixtures"


def pinned_state():
    """The 3x3-room SynthSeq-style exemplar instance, rebuilt from the JSON fixture's config."""
    cfg = json.loads((FIX / "reference_json.txt").read_text(encoding="utf-8"))["config"]
    objs = []
    for i, o in enumerate(cfg["objects"]):
        ds = None
        if o["type"] == "door":
            ds = DoorState.LOCKED if o["locked"] else DoorState.CLOSED
        objs.append(WorldObject(o["type"], o["color"], tuple(o["position"]), ds, i))
    agent = AgentState(tuple(cfg["agent_initial_pos"]), Direction(cfg["agent_direction"]["index"]))
    return WorldState(Layout(*cfg["num_rooms"], cfg["room_size_incl_walls"][0]), tuple(objs), agent), cfg["mission"]


@pytest.mark.parametrize("style,name", [
    ("structured", "reference_structured.txt"),
    ("json", "reference_json.txt"),
    ("narrative", "reference_narrative.txt"),
])
def test_reference_layouts_byte_identical(style, name):
    state, mission = pinned_state()
    want = (FIX / name).read_text(encoding="utf-8")
    assert format_env(state, mission, style) == want
    assert format_env(state, mission, style) == format_env(state, mission, style)


def test_structured_field_lines():
    state, mission = pinned_state()
    text = format_env(state, mission)
    assert "- Agent initial position: (4, 12)\n" in text
    assert "- Agent facing direction: north (toward (4, 11))\n" in text
    assert "  - door, color=grey, position=(7, 6), locked=False\n" in text
    cfg = json.loads(format_env(state, mission, "json"))["config"]
    assert cfg["agent_direction"] == {"index": 3, "name": "north"}


def test_round_trip_over_generated_instances():
    n = 0
    texts = {}
    for level in LEVEL_NAMES:
        for seed in range(63):
            inst = generate(level, seed)
            text = format(inst)
            back = parse_structured(text)
            assert back.state == inst.state
            assert back.mission == inst.mission.surface
            texts.setdefault(text, inst.state)
            assert texts[text] == inst.state
            n += 1
    assert n >= 1000


def test_styles_agree_on_numbers():
    for seed in range(10):
        inst = generate("BossLevel", seed)
        st = parse_structured(format(inst, "structured")).state
        cfg = json.loads(format(inst, "json"))["config"]
        assert tuple(cfg["agent_initial_pos"]) == st.agent.pos
        assert cfg["grid_size"] == [st.width, st.height]
        assert [tuple(o["position"]) for o in cfg["objects"]] == [o.pos for o in st.objects]
        assert [o.get("locked") for o in cfg["objects"]] == [o.is_locked if o.is_door else None for o in st.objects]
        narrative = format(inst, "narrative")
        for o in st.objects:
            assert f"({o.pos[0]}, {o.pos[1]})" in narrative


def test_empty_room():
    s = WorldState(Layout(1, 1, 8), (), AgentState((3, 3), Direction.SOUTH))
    back = parse_structured(format_env(s, "go to the red ball"))
    assert back.state.objects == () and back.state.agent == s.agent
    assert "There are no objects" in format_env(s, "", "narrative")


def test_tampered_line_reports_line_number():
    state, mission = pinned_state()
    lines = format_env(state, mission).split("\n")
    i = next(k for k, ln in enumerate(lines) if ln.startswith("- Agent initial position"))
    lines[i] = "- Agent initial position: (4, )"
    with pytest.raises(FormatParseError) as exc:
        parse_structured("\n".join(lines))
    assert exc.value.line_no == i + 1


def test_show_open_extension_round_trips_open_doors():
    door = WorldObject("door", "blue", (7, 3), DoorState.CLOSED, 0)
    s = WorldState(Layout(2, 1, 8), (door,), AgentState((6, 3), Direction.EAST))
    opened = step(s, "toggle")
    opts = FormatOptions(show_open=True)
    text = format_env(opened, "", "structured", opts)
    assert "locked=False, open=True" in text
    assert parse_structured(text).state.objects == opened.objects
    assert "open=" not in format_env(opened, "")
