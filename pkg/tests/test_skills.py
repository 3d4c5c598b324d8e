"""Skill parsing, path planning, and execution tests."""
from __future__ import annotations

from dataclasses import replace

import pytest

from haplan.kitchen import (
    Action,
    CleanDish,
    Direction,
    EpisodeConfig,
    GridPos,
    Ingredient,
    PlayerId,
    PotState,
    RawIngredient,
    SoupDish,
    initial_state,
    load_layout,
    parse_layout,
    step,
)
from haplan.skills import (
    FailReason,
    ParseError,
    SkillCommand,
    SkillItem,
    SkillKind,
    Unreachable,
    parse_skill,
    plan_path,
    render_skill,
    skill_step,
    start_skill,
)

TINY = "XXXXX\nXO1DX\nX 2PX\nXXSXX"


def with_player(state, pid, **changes):
    players = tuple(replace(p, **changes) if p.id is pid else p for p in state.players)
    return replace(state, players=players)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def test_parse_skill_basic():
    assert parse_skill("Fetch Onion at (2,1)") == SkillCommand(
        SkillKind.FETCH, SkillItem.ONION, GridPos(2, 1))
    assert parse_skill("deliver soup to (5, 2)") == SkillCommand(
        SkillKind.DELIVER, SkillItem.SOUP, GridPos(5, 2))
    assert parse_skill("Fetch the plate at (4,1)").item is SkillItem.DISH
    assert parse_skill("Deliver onion soup to (5,2)").item is SkillItem.SOUP
    assert parse_skill("Fetch tomatoes at (3,5)").item is SkillItem.TOMATO


def test_parse_skill_round_trip():
    for cmd in [
        SkillCommand(SkillKind.FETCH, SkillItem.ONION, GridPos(2, 1)),
        SkillCommand(SkillKind.DELIVER, SkillItem.DISH, GridPos(1, 3)),
        SkillCommand(SkillKind.DELIVER, SkillItem.SOUP, GridPos(5, 2)),
    ]:
        assert parse_skill(render_skill(cmd)) == cmd


def test_parse_skill_errors():
    with pytest.raises(ParseError) as err:
        parse_skill("Grab onion at (2,1)")
    assert err.value.position == 0
    with pytest.raises(ParseError):
        parse_skill("Fetch sandwich at (2,1)")
    with pytest.raises(ParseError):
        parse_skill("Fetch onion at 2,1")


# ---------------------------------------------------------------------------
# Path planning
# ---------------------------------------------------------------------------


def test_plan_path_empty_when_in_position():
    lay = parse_layout(TINY, name="tiny")
    state = initial_state(lay)
    state = with_player(state, PlayerId.AI, pos=GridPos(1, 2), facing=Direction.WEST)
    assert plan_path(lay, state, GridPos(1, 2), GridPos(1, 1), Direction.WEST) == []


def test_plan_path_turn_costs_one():
    lay = parse_layout(TINY, name="tiny")
    state = initial_state(lay)
    path = plan_path(lay, state, GridPos(1, 2), GridPos(1, 1), Direction.SOUTH)
    assert path == [Action.LEFT]


def test_plan_path_blocks_partner_tile():
    lay = parse_layout(TINY, name="tiny")
    state = initial_state(lay)  # HUMAN at (2,2), the only route down
    with pytest.raises(Unreachable):
        plan_path(lay, state, GridPos(1, 2), GridPos(3, 2), Direction.SOUTH)


def test_plan_path_lengths_match_independent_search():
    """Planner path length equals an independently computed BFS distance."""
    for name in ("counter_circle", "solo_pot", "triple_pot"):
        lay = load_layout(name)
        state = initial_state(lay)
        # park the partner on its spawn; plan for the AI from several floors
        floors = [GridPos(r, c) for r in range(lay.height) for c in range(lay.width)
                  if lay.is_floor(GridPos(r, c)) and GridPos(r, c) != lay.spawns[1]]
        goals = lay.pots + [lay.spawns[0]]
        for start in floors[:6]:
            at_start = with_player(state, PlayerId.AI, pos=start)
            for goal in lay.pots:
                expect = _reference_distance(lay, start, Direction.SOUTH, goal,
                                             blocked={lay.spawns[1]})
                try:
                    path = plan_path(lay, at_start, start, goal, Direction.SOUTH)
                except Unreachable:
                    assert expect is None
                    continue
                assert expect == len(path)


def _reference_distance(lay, start, facing, goal, blocked):
    """Plain frontier expansion over (pos, facing) pairs, written separately."""
    seen = {(start, facing)}
    frontier = [(start, facing)]
    dist = 0
    deltas = {Direction.NORTH: (-1, 0), Direction.SOUTH: (1, 0),
              Direction.WEST: (0, -1), Direction.EAST: (0, 1)}
    while frontier:
        for pos, face in frontier:
            dr, dc = deltas[face]
            if (pos.row + dr, pos.col + dc) == tuple(goal):
                return dist
        nxt = []
        for pos, face in frontier:
            for d, (dr, dc) in deltas.items():
                t = GridPos(pos.row + dr, pos.col + dc)
                landing = t if (lay.is_floor(t) and t not in blocked) else pos
                key = (landing, d)
                if key not in seen:
                    seen.add(key)
                    nxt.append(key)
        frontier = nxt
        dist += 1
    return None


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


def run_solo(lay, state, agent, command, max_ticks=100, cfg=EpisodeConfig()):
    """Drive one agent's skill with the partner idle; returns (state, progress, ticks)."""
    progress = start_skill(command)
    ticks = 0
    while ticks < max_ticks:
        action, progress = skill_step(lay, state, agent, progress)
        if progress.done or progress.failed:
            return state, progress, ticks
        state, _ = step(state, lay, {agent: action}, cfg)
        ticks += 1
    return state, progress, ticks


def test_fetch_onion_completes_in_distance_plus_one():
    lay = parse_layout(TINY, name="tiny")
    state = initial_state(lay)
    cmd = parse_skill("Fetch onion at (1,1)")
    d = len(plan_path(lay, state, GridPos(1, 2), GridPos(1, 1), Direction.SOUTH))
    state, progress, ticks = run_solo(lay, state, PlayerId.AI, cmd)
    assert progress.done
    assert ticks == d + 1
    assert state.player(PlayerId.AI).held == RawIngredient(Ingredient.ONION)


def test_fetch_with_full_hand_fails():
    lay = parse_layout(TINY, name="tiny")
    state = initial_state(lay)
    state = with_player(state, PlayerId.AI, held=RawIngredient(Ingredient.ONION))
    _, progress, _ = run_solo(lay, state, PlayerId.AI, parse_skill("Fetch dish at (1,3)"))
    assert progress.failed
    assert progress.reason is FailReason.PRECONDITION_LOST


def test_fetch_already_holding_is_done_instantly():
    lay = parse_layout(TINY, name="tiny")
    state = initial_state(lay)
    state = with_player(state, PlayerId.AI, held=CleanDish())
    _, progress, ticks = run_solo(lay, state, PlayerId.AI, parse_skill("Fetch dish at (1,3)"))
    assert progress.done
    assert ticks == 0


def test_deliver_dish_to_pot_waits_and_scoops():
    lay = parse_layout(TINY, name="tiny")
    cfg = EpisodeConfig(cook_time=5)
    pot = GridPos(2, 3)
    state = initial_state(lay)
    state = replace(state, pots={pot: PotState((Ingredient.ONION,) * 3, cook_ticks_remaining=5)})
    state = with_player(state, PlayerId.AI, pos=GridPos(2, 2), facing=Direction.EAST,
                        held=CleanDish())
    state, progress, ticks = run_solo(lay, state, PlayerId.AI,
                                      parse_skill("Deliver dish to (2,3)"), cfg=cfg)
    assert progress.done
    held = state.player(PlayerId.AI).held
    assert isinstance(held, SoupDish)
    assert held.origin == pot
    assert ticks == 6  # five cook ticks to wait out, then the scoop itself


def test_deliver_ingredient_to_cooking_pot_fails():
    lay = parse_layout(TINY, name="tiny")
    pot = GridPos(2, 3)
    state = initial_state(lay)
    state = replace(state, pots={pot: PotState((Ingredient.ONION,) * 3, cook_ticks_remaining=9)})
    state = with_player(state, PlayerId.AI, held=RawIngredient(Ingredient.ONION))
    _, progress, _ = run_solo(lay, state, PlayerId.AI, parse_skill("Deliver onion to (2,3)"))
    assert progress.failed
    assert progress.reason is FailReason.PRECONDITION_LOST


def test_deliver_soup_to_port_empties_hand_and_scores():
    lay = parse_layout(TINY, name="tiny")
    state = initial_state(lay)
    state = with_player(state, PlayerId.AI, pos=GridPos(2, 2),
                        held=SoupDish((Ingredient.ONION,) * 3, GridPos(2, 3)))
    state, progress, _ = run_solo(lay, state, PlayerId.AI, parse_skill("Deliver soup to (3,2)"))
    assert progress.done
    assert state.player(PlayerId.AI).held is None
    assert state.score == 20


def test_deliver_without_item_fails():
    lay = parse_layout(TINY, name="tiny")
    state = initial_state(lay)
    _, progress, _ = run_solo(lay, state, PlayerId.AI, parse_skill("Deliver soup to (3,2)"))
    assert progress.failed
    assert progress.reason is FailReason.PRECONDITION_LOST


def test_unreachable_after_wait_budget():
    lay = parse_layout(TINY, name="tiny")
    state = initial_state(lay)  # HUMAN parks on (2,2) forever; port is below
    state = with_player(state, PlayerId.AI,
                        held=SoupDish((Ingredient.ONION,) * 3, GridPos(2, 3)))
    state, progress, ticks = run_solo(lay, state, PlayerId.AI,
                                      parse_skill("Deliver soup to (3,2)"))
    assert progress.failed
    assert progress.reason is FailReason.UNREACHABLE
    assert ticks == 3  # waits out the budget before giving up


def test_skill_on_wrong_tile_kind_fails():
    lay = parse_layout(TINY, name="tiny")
    state = initial_state(lay)
    _, progress, _ = run_solo(lay, state, PlayerId.AI, parse_skill("Fetch onion at (1,3)"))
    assert progress.failed


def test_counter_fetch_and_deliver():
    lay = parse_layout(TINY, name="tiny")
    counter = GridPos(0, 2)
    state = initial_state(lay)
    state = with_player(state, PlayerId.AI, held=RawIngredient(Ingredient.ONION))
    state, progress, _ = run_solo(lay, state, PlayerId.AI,
                                  parse_skill("Deliver onion to (0,2)"))
    assert progress.done
    assert state.counter_items[counter] == RawIngredient(Ingredient.ONION)
    state, progress, _ = run_solo(lay, state, PlayerId.AI,
                                  parse_skill("Fetch onion at (0,2)"))
    assert progress.done
    assert state.player(PlayerId.AI).held == RawIngredient(Ingredient.ONION)
