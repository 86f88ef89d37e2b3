import pytest
from hypothesis import given, strategies as st

from babybench.grid import COLORS, AgentState, Direction, DoorState, Layout, WorldObject, WorldState, replay
from babybench.missions import (
    After,
    And,
    GoTo,
    IllPosedMission,
    Mission,
    ObjectDesc,
    Open,
    Pickup,
    PutNext,
    Then,
    check_success,
    match_objects,
    parse_mission,
)


def test_render_examples():
    m = Mission(
        Then(
            And(Pickup(ObjectDesc("ball", "grey")), GoTo(ObjectDesc("ball", None, "in_front_of_you", True))),
            And(GoTo(ObjectDesc("box")), PutNext(ObjectDesc("box", "purple"), ObjectDesc("door", "red", definite=True))),
        )
    )
    assert m.surface == (
        "pick up a grey ball and go to the ball in front of you, "
        "then go to a box and put a purple box next to the red door"
    )
    assert Mission(GoTo(ObjectDesc("key", "blue", definite=True))).surface == "go to the blue key"
    assert Mission(Open(ObjectDesc("door", "green", definite=True))).surface == "open the green door"
    assert parse_mission(m.surface) == m
    assert m.connectors == ["and", "then", "and"]


descs = st.builds(
    ObjectDesc,
    st.sampled_from(["key", "ball", "box", "door"]),
    st.one_of(st.none(), st.sampled_from(COLORS)),
    st.one_of(st.none(), st.sampled_from(["in_front_of_you", "behind_you", "on_your_left", "on_your_right"])),
    st.booleans(),
)
clauses = st.one_of(
    st.builds(GoTo, descs), st.builds(Open, descs), st.builds(Pickup, descs), st.builds(PutNext, descs, descs)
)
simple = st.one_of(clauses, st.builds(And, clauses, clauses))
trees = st.one_of(simple, st.builds(Then, simple, simple), st.builds(After, simple, simple))


@given(trees)
def test_render_parse_round_trip(node):
    m = Mission(node)
    assert parse_mission(m.surface) == m
    assert parse_mission(m.surface + ".") == m


def _world(objs, pos=(3, 3), d=Direction.EAST, cols=2):
    objs = [WorldObject(o.kind, o.color, o.pos, o.door_state, i) for i, o in enumerate(objs)]
    return WorldState(Layout(cols, 1, 8), tuple(objs), AgentState(pos, d))


def test_goto_adjacent_succeeds():
    s = _world([WorldObject("key", "blue", (5, 3))])
    m = parse_mission("go to the blue key")
    assert not check_success(m, [s])
    assert check_success(m, replay(s, ["forward"]))


def test_empty_mission_is_vacuous():
    assert check_success(Mission(None), [])


def test_unopened_door_fails():
    s = _world([WorldObject("door", "green", (7, 3), DoorState.CLOSED)])
    assert not check_success(parse_mission("open the green door"), replay(s, ["left", "left", "forward"]))


def test_ordering_then_and_after():
    key = WorldObject("key", "blue", (5, 3))
    ball = WorldObject("ball", "red", (1, 3))
    s = _world([key, ball], pos=(3, 3), d=Direction.EAST)
    # reach the key first, then the ball
    tr = replay(s, ["forward", "left", "left", "forward", "forward"])
    assert check_success(parse_mission("go to the blue key, then go to the red ball"), tr)
    assert not check_success(parse_mission("go to the red ball, then go to the blue key"), tr)
    assert check_success(parse_mission("go to the red ball after you go to the blue key"), tr)
    assert not check_success(parse_mission("go to the blue key after you go to the red ball"), tr)
    assert check_success(parse_mission("go to the red ball and go to the blue key"), tr)


def test_pickup_and_putnext():
    ball = WorldObject("ball", "red", (4, 3))
    box = WorldObject("box", "grey", (4, 5))
    s = _world([ball, box], pos=(3, 3))
    tr = replay(s, ["pickup", "right", "forward", "left", "drop"])
    assert tr[-1].object_at((4, 4)).kind == "ball"
    assert check_success(parse_mission("pick up the red ball"), tr)
    assert check_success(parse_mission("put the red ball next to the grey box"), tr)
    assert not check_success(parse_mission("put the red ball next to the grey box"), tr[:-1])


def test_location_half_planes():
    s = _world(
        [WorldObject("ball", "red", (5, 3)), WorldObject("ball", "blue", (1, 3)), WorldObject("ball", "green", (3, 1)),
         WorldObject("ball", "grey", (3, 5)), WorldObject("ball", "purple", (10, 3))],
        pos=(3, 3),
        d=Direction.EAST,
    )

    def colors(loc):
        return {o.color for o in match_objects(ObjectDesc("ball", None, loc), s)}

    # other-room objects never match a located descriptor
    assert colors("in_front_of_you") == {"red"}
    assert colors("behind_you") == {"blue"}
    assert colors("on_your_left") == {"green"}
    assert colors("on_your_right") == {"grey"}


def test_ill_posed_descriptor():
    s = _world([WorldObject("ball", "red", (5, 3))])
    with pytest.raises(IllPosedMission):
        check_success(parse_mission("go to the blue key"), [s])
