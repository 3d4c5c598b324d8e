"""Acceptance gate: one test per promised behavior of the finished system.

Each test checks a headline guarantee end to end, with its runtime budget
enforced inside the test, so a single verbose pass line vouches for the
whole promise. Expected values were fixed by hand or by independent
reference computations before the implementation existed.
"""
from __future__ import annotations

import random
import time
from dataclasses import replace
from importlib import resources

from haplan import prompts
from haplan.agents import ConventionAgent
from haplan.backends import LesionedBackend, OracleBackend
from haplan.bench import (
    PlannerConfig,
    default_instruction,
    plan_policy,
    run_reasoning_bench,
)
from haplan.convention import (
    ConstraintMode,
    Descriptor,
    DescriptorKind,
    RoughWorkItem,
    SourceConstraint,
    WorkKind,
    parse_convention,
)
from haplan.episode import run_episode
from haplan.kitchen import (
    Action,
    CleanDish,
    Direction,
    EpisodeConfig,
    EventKind,
    GridPos,
    Ingredient,
    LayoutFacts,
    PlayerId,
    PotState,
    RawIngredient,
    SoupDish,
    available_layouts,
    initial_state,
    layout_facts,
    load_layout,
    step,
    step_with_events,
)
from haplan.oracle import (
    PreferenceSpec,
    complement_assignment,
    estimate_time,
    gen_instruction,
    grade,
    ground_truth,
    random_spec,
    refine,
    schedule,
)
from haplan.pipeline import PlanningContext, replan, run_pipeline
from haplan.proxy import ProxyTask, make_proxy, parse_proxy_spec
from haplan.reasoning import (
    ReasoningOracle,
    ReasoningTask,
    gen_scan,
    lastletter_expected,
    scan_interpret,
)
from haplan.skills import parse_skill, skill_step, start_skill

STUDY_LAYOUTS = ("asymmetric_advantages", "counter_circle", "distant_tomato",
                 "many_orders", "soup_coordination")
JOIN = "Please join me in making onion soup."
FEEDBACK = ("You are only responsible for putting the onion into the pot, "
            "and do not take onions from the onion dots below.")

ROW_POTS = [GridPos(1, 2), GridPos(1, 3), GridPos(1, 4)]
DEMO_FACTS = LayoutFacts(
    pots=tuple(ROW_POTS),
    onions=(GridPos(2, 1), GridPos(3, 1)),
    tomatoes=(),
    dishes=(GridPos(4, 1), GridPos(4, 5)),
    ports=(GridPos(5, 2),),
)


def fetch(pot, agent=PlayerId.AI, est=None):
    return RoughWorkItem(agent=agent, kind=WorkKind.FETCH,
                         pot=GridPos(*pot), est_steps=est)


def deliver(pot, agent=PlayerId.AI, est=None):
    return RoughWorkItem(agent=agent, kind=WorkKind.DELIVER,
                         pot=GridPos(*pot), est_steps=est)


def golden(name: str) -> str:
    return (resources.files("haplan") / "assets" / "golden"
            / f"{name}.txt").read_text()


def with_player(state, pid, **changes):
    players = tuple(replace(p, **changes) if p.id is pid else p
                    for p in state.players)
    return replace(state, players=players)


def test_planner_reproduces_worked_examples():
    """Frozen planning answers, including the two-round dialogue, stay exact."""
    start = time.perf_counter()

    # work split: the three remaining units go to the partner
    ai = (fetch((1, 2)), deliver((1, 2)), deliver((1, 3)))
    assert complement_assignment(ai, ROW_POTS, Ingredient.ONION) == (
        fetch((1, 3), PlayerId.HUMAN),
        fetch((1, 4), PlayerId.HUMAN),
        deliver((1, 4), PlayerId.HUMAN),
    )

    # refinement: nearest source, first-listed tie, constraint override
    assert refine(fetch((1, 2)), DEMO_FACTS,
                  objective=Ingredient.ONION).source == (2, 1)
    assert refine(deliver((1, 3)), DEMO_FACTS).dish_source == (4, 1)
    only_below = SourceConstraint(Ingredient.ONION, ConstraintMode.ONLY_FROM,
                                  Descriptor(DescriptorKind.BELOW))
    assert refine(fetch((1, 2)), DEMO_FACTS, (only_below,),
                  Ingredient.ONION).source == (3, 1)

    # time estimates: six steps per tile fetching, leg sums delivering
    assert estimate_time(refine(fetch((1, 2)), DEMO_FACTS,
                                objective=Ingredient.ONION)) == 12
    assert estimate_time(refine(deliver((1, 3)), DEMO_FACTS)) == 12

    # scheduling: the early delivery waits out the cook clock
    items = [(fetch((1, 2)), 12), (deliver((1, 2)), 10), (fetch((1, 3)), 18)]
    assert [(it.kind, tuple(it.pot)) for it in schedule(items)] == [
        (WorkKind.FETCH, (1, 2)), (WorkKind.FETCH, (1, 3)),
        (WorkKind.DELIVER, (1, 2))]

    # the two-round dialogue: full claim first, then the scoped-down redo
    solo = load_layout("solo_pot")
    backend = OracleBackend()
    conv1, transcripts1 = run_pipeline(JOIN, solo, backend)
    assert conv1.same_work(parse_convention(golden("replan_round1_convention")))
    assert all(t.parsed_ok for t in transcripts1)

    context = PlanningContext.for_layout(solo, JOIN)
    conv2, _ = replan(conv1, FEEDBACK, context, backend)
    assert conv2.same_work(parse_convention(golden("replan_round2_convention")))
    (only_step,) = conv2.ai_plan
    assert only_step.refined.source == GridPos(1, 7)

    assert time.perf_counter() - start < 1.0


def test_cook_clock_runs_exactly_twenty_ticks():
    """The third ingredient at tick t means scoopable at t+20, never sooner."""
    rng = random.Random(0)
    config = EpisodeConfig()
    for _ in range(30):
        layout = load_layout(rng.choice(available_layouts()))
        facts = layout_facts(layout)
        pot = rng.choice(facts.pots)
        sides = [d.step_from(pot) for d in Direction]
        stand = rng.choice([c for c in sides if layout.is_floor(c)])
        facing = next(d for d in Direction if d.step_from(stand) == pot)
        parking = next(c for c in (GridPos(r, col)
                                   for r in range(layout.height)
                                   for col in range(layout.width))
                       if layout.is_floor(c) and c != stand)

        state = initial_state(layout)
        state = with_player(state, PlayerId.HUMAN, pos=parking)
        state = with_player(state, PlayerId.AI, pos=stand, facing=facing,
                            held=RawIngredient(Ingredient.ONION))
        state = replace(state, pots={
            **state.pots,
            pot: PotState((Ingredient.ONION, Ingredient.ONION))})
        for _ in range(rng.randrange(12)):
            state, _, _ = step_with_events(state, layout, {}, config)

        fill_tick = state.tick
        state, _, _ = step_with_events(state, layout,
                                       {PlayerId.AI: Action.INTERACT}, config)
        assert state.pots[pot].cook_ticks_remaining == config.cook_time
        state = with_player(state, PlayerId.AI, held=CleanDish())

        early = fill_tick + rng.randrange(1, config.cook_time)
        for bound, should_scoop in ((early, False),
                                    (fill_tick + config.cook_time - 1, False),
                                    (fill_tick + config.cook_time, True)):
            branch = state
            while branch.tick < bound:
                branch, _, _ = step_with_events(branch, layout, {}, config)
            branch, _, _ = step_with_events(
                branch, layout, {PlayerId.AI: Action.INTERACT}, config)
            scooped = branch.player(PlayerId.AI).held
            assert isinstance(scooped, SoupDish) == should_scoop, bound
            if should_scoop:
                assert scooped.origin == pot
                assert len(scooped.recipe) == config.recipe_size


def test_skills_finish_in_shortest_path_plus_one():
    """Alone on the study layouts, every reachable job takes exactly d+1 ticks."""
    start_time = time.perf_counter()
    deltas = {Direction.NORTH: (-1, 0), Direction.SOUTH: (1, 0),
              Direction.WEST: (0, -1), Direction.EAST: (0, 1)}

    def flood_distance(lay, start, facing, goal, blocked):
        """Shortest move count until the faced neighbor is the goal tile."""
        seen = {(start, facing)}
        frontier = [(start, facing)]
        dist = 0
        while frontier:
            for pos, face in frontier:
                dr, dc = deltas[face]
                if (pos.row + dr, pos.col + dc) == tuple(goal):
                    return dist
            grown = []
            for pos, face in frontier:
                for d, (dr, dc) in deltas.items():
                    target = GridPos(pos.row + dr, pos.col + dc)
                    landing = (target if lay.is_floor(target)
                               and target not in blocked else pos)
                    key = (landing, d)
                    if key not in seen:
                        seen.add(key)
                        grown.append(key)
            frontier = grown
            dist += 1
        return None

    def run_alone(lay, state, command):
        progress = start_skill(command)
        ticks = 0
        while ticks < 200:
            action, progress = skill_step(lay, state, PlayerId.AI, progress)
            if progress.done or progress.failed:
                return progress, ticks
            state, _ = step(state, lay, {PlayerId.AI: action}, EpisodeConfig())
            ticks += 1
        return progress, ticks

    checked = 0
    for name in STUDY_LAYOUTS:
        lay = load_layout(name)
        facts = layout_facts(lay)
        base = initial_state(lay)
        parked = lay.spawns[1]
        place = (Ingredient.ONION if facts.onions else Ingredient.TOMATO)
        jobs = (
            [(f"Fetch onion at ({p.row},{p.col})", p, None)
             for p in facts.onions]
            + [(f"Fetch tomato at ({p.row},{p.col})", p, None)
               for p in facts.tomatoes]
            + [(f"Fetch dish at ({p.row},{p.col})", p, None)
               for p in facts.dishes]
            + [(f"Deliver {place.value} to ({p.row},{p.col})", p,
                RawIngredient(place)) for p in facts.pots]
            + [(f"Deliver soup to ({p.row},{p.col})", p,
                SoupDish((Ingredient.ONION,) * 3, facts.pots[0]))
               for p in facts.ports]
        )
        floors = [GridPos(r, c) for r in range(lay.height)
                  for c in range(lay.width)
                  if lay.is_floor(GridPos(r, c)) and GridPos(r, c) != parked]
        for start in floors:
            for text, goal, held in jobs:
                state = with_player(base, PlayerId.AI, pos=start,
                                    facing=Direction.SOUTH, held=held)
                expect = flood_distance(lay, start, Direction.SOUTH, goal,
                                        {parked})
                progress, ticks = run_alone(lay, state, parse_skill(text))
                if expect is None:
                    assert progress.failed, (name, start, text)
                else:
                    assert progress.done, (name, start, text, progress.reason)
                    assert ticks == expect + 1, (name, start, text)
                checked += 1
    assert checked > 1000
    assert time.perf_counter() - start_time < 10.0


def test_pipeline_closes_over_random_preferences():
    """Generated preference -> instruction -> plan -> grade stays all-true."""
    start = time.perf_counter()
    backend = OracleBackend()
    for name in available_layouts():
        layout = load_layout(name)
        rng = random.Random(name)
        for case in range(200):
            spec = random_spec(rng, layout)
            instruction = gen_instruction(spec, layout, seed=case)
            truth = ground_truth(spec, layout)
            _, transcripts = run_pipeline(instruction, layout, backend)
            report = grade(transcripts, truth)
            assert report.all_true, (name, spec, instruction)

    # a corrupted refinement answer is pinned to its stage, and only there
    solo = load_layout("solo_pot")
    saboteur = LesionedBackend(
        OracleBackend(),
        corrupt_when=prompts.REFINE_MARKER,
        replace=("position (5,5)", "position (1,7)"),
    )
    _, transcripts = run_pipeline(JOIN, solo, saboteur)
    truth = ground_truth(PreferenceSpec(Ingredient.ONION, frozenset({0}),
                                        frozenset({0})), solo)
    report = grade(transcripts, truth)
    assert report.stages == {"key_info": True, "rough": True, "refine": False,
                             "time": True, "schedule": True}
    assert not report.final
    assert time.perf_counter() - start < 60.0


def test_convention_pairs_clear_the_score_floor():
    """Two plan-following chefs hit the per-layout delivery floors."""
    start = time.perf_counter()
    floors = {name: 20 for name in available_layouts()}
    floors["many_orders"] = 60
    for name, floor in floors.items():
        layout = load_layout(name)
        convention, _ = run_pipeline(default_instruction(layout), layout,
                                     OracleBackend())
        config = EpisodeConfig()
        ai = ConventionAgent(convention, layout, PlayerId.AI, config)
        partner = ConventionAgent(convention, layout, PlayerId.HUMAN, config)
        result = run_episode(layout, ai, partner, config)
        assert result.ticks == 400
        assert result.score >= floor, (name, result.score)
    assert time.perf_counter() - start < 30.0


def test_reasoning_harness_matches_frozen_answers():
    """Hand answers, compositional identities, and a perfect oracle grid."""
    start = time.perf_counter()
    assert lastletter_expected(["listening", "thinking", "improve"]) == "gge"
    assert scan_interpret("look thrice after jump") == "JUMP LOOK LOOK LOOK"
    assert scan_interpret("run left and walk") == "TURN_LEFT RUN WALK"

    items = gen_scan(1000, seed=5)
    atoms = []
    for item in items:
        command = item.input_text
        assert scan_interpret(command) == item.expected
        if " and " in command:
            left, right = command.split(" and ")
            assert (scan_interpret(command)
                    == f"{scan_interpret(left)} {scan_interpret(right)}")
        elif " after " in command:
            left, right = command.split(" after ")
            assert (scan_interpret(command)
                    == f"{scan_interpret(right)} {scan_interpret(left)}")
        else:
            atoms.append(command)
    assert len(atoms) > 100
    for i, left in enumerate(atoms):
        right = atoms[(i + 1) % len(atoms)]
        assert (scan_interpret(f"{left} and {right}")
                == f"{scan_interpret(left)} {scan_interpret(right)}")
        assert (scan_interpret(f"{left} after {right}")
                == f"{scan_interpret(right)} {scan_interpret(left)}")

    for length in (4, 6, 8, 10, 12):
        for sessions in (1, 2):
            report = run_reasoning_bench(
                ReasoningTask.LASTLETTER, sessions, ReasoningOracle(),
                n=10, params={"length": length}, seed=length + sessions)
            assert report.final == 1.0, (length, sessions)
            assert all(v == 1.0 for v in report.per_stage.values())
    assert time.perf_counter() - start < 30.0


def test_score_tracks_deliveries_and_proxies_stay_on_preference():
    """Score is 20 per served soup; partners never touch off-preference pots."""
    event_tasks = {EventKind.PLACE_INGREDIENT: ProxyTask.PLACEMENT,
                   EventKind.DELIVER_SOUP: ProxyTask.DELIVERY}
    cells = [
        ("solo_pot", "proxy:placement:onion:all"),
        ("solo_pot", "proxy:delivery::all"),
        ("triple_pot", "proxy:delivery::1"),
        ("triple_pot", "proxy:placement:onion:2,3"),
        ("many_orders", "proxy:placement:tomato:1,2"),
        ("many_orders", "proxy:delivery::3"),
        ("counter_circle", "proxy:placement+delivery:onion:all"),
        ("distant_tomato", "proxy:delivery::all"),
        ("asymmetric_advantages", "proxy:placement:onion:1"),
        ("soup_coordination", "proxy:placement:onion:all"),
    ]
    for layout_name, partner_spec in cells:
        layout = load_layout(layout_name)
        config = EpisodeConfig()
        ai, _ = plan_policy(layout, PlannerConfig())
        pref = parse_proxy_spec(partner_spec)
        partner = make_proxy(pref, layout, PlayerId.HUMAN, config)
        result = run_episode(layout, ai, partner, config)

        served = sum(1 for e in result.event_log
                     if e.kind is EventKind.DELIVER_SOUP)
        assert result.score == config.score_per_soup * served

        pot_number = {pos: i for i, pos in
                      enumerate(layout_facts(layout).pots)}
        for event in result.event_log:
            task = event_tasks.get(event.kind)
            if task is None or event.agent is not PlayerId.HUMAN:
                continue
            assert task in pref.tasks, (layout_name, partner_spec, event)
            if pref.pots is not None:
                assert pot_number[event.pot] in pref.pots, (
                    layout_name, partner_spec, event)
            if task is ProxyTask.PLACEMENT and pref.ingredient is not None:
                assert event.item == pref.ingredient.value, (
                    layout_name, partner_spec, event)
