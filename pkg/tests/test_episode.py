"""Episode rollouts, scoring, and event proportion accounting."""
from __future__ import annotations

from haplan.agents import ConventionAgent
from haplan.backends import OracleBackend
from haplan.convention import Ingredient
from haplan.episode import (
    StayPolicy,
    act,
    event_proportions,
    run_episode,
)
from haplan.kitchen import (
    Action,
    EpisodeConfig,
    EventKind,
    PlayerId,
    layout_facts,
    load_layout,
)
from haplan.oracle import PreferenceSpec, ground_truth, truth_convention
from haplan.pipeline import run_pipeline
from haplan.proxy import make_proxy, parse_proxy_spec

JOIN = "Please join me in making onion soup."


def planned_agents(layout, spec):
    conv = truth_convention(ground_truth(spec, layout_facts(layout)))
    return (ConventionAgent(conv, layout, PlayerId.AI),
            ConventionAgent(conv, layout, PlayerId.HUMAN))


class TestRunEpisode:
    def test_both_stay_scores_zero(self):
        layout = load_layout("solo_pot")
        result = run_episode(layout, StayPolicy(), StayPolicy())
        assert result.score == 0
        assert result.event_log == ()
        assert result.discounted_return == 0.0
        assert result.ticks == EpisodeConfig().horizon

    def test_act_delegates_to_the_policy(self):
        layout = load_layout("solo_pot")
        policy = StayPolicy()
        from haplan.kitchen import initial_state
        assert act(policy, initial_state(layout), layout) is Action.STAY

    def test_score_matches_delivery_events(self):
        layout = load_layout("many_orders")
        spec = PreferenceSpec(Ingredient.ONION, {0, 1, 2}, {0, 1, 2})
        ai, human = planned_agents(layout, spec)
        result = run_episode(layout, ai, human)
        deliveries = sum(1 for e in result.event_log
                         if e.kind is EventKind.DELIVER_SOUP)
        assert deliveries >= 3
        assert result.score == EpisodeConfig().score_per_soup * deliveries

    def test_undiscounted_return_equals_score(self):
        layout = load_layout("solo_pot")
        conv, _ = run_pipeline(JOIN, layout, OracleBackend())
        ai = ConventionAgent(conv, layout, PlayerId.AI)
        result = run_episode(layout, ai, StayPolicy())
        assert result.discounted_return == float(result.score)

    def test_zero_discount_keeps_only_the_first_tick(self):
        layout = load_layout("solo_pot")
        conv, _ = run_pipeline(JOIN, layout, OracleBackend())
        ai = ConventionAgent(conv, layout, PlayerId.AI)
        config = EpisodeConfig(discount=0.0)
        result = run_episode(layout, ai, StayPolicy(), config)
        assert result.score > 0
        assert result.discounted_return == 0.0

    def test_discounting_weights_early_deliveries(self):
        layout = load_layout("solo_pot")
        conv, _ = run_pipeline(JOIN, layout, OracleBackend())
        ai = ConventionAgent(conv, layout, PlayerId.AI)
        config = EpisodeConfig(discount=0.99)
        result = run_episode(layout, ai, StayPolicy(), config)
        ticks = [e.tick for e in result.event_log
                 if e.kind is EventKind.DELIVER_SOUP]
        expected = sum(0.99 ** t * 20 for t in ticks)
        assert abs(result.discounted_return - expected) < 1e-9

    def test_same_seed_reproduces_the_log(self):
        layout = load_layout("triple_pot")
        spec = PreferenceSpec(Ingredient.ONION, {0, 1, 2}, {0, 1, 2})
        first = run_episode(layout, *planned_agents(layout, spec))
        second = run_episode(layout, *planned_agents(layout, spec))
        assert first == second

    def test_result_carries_the_seed(self):
        layout = load_layout("solo_pot")
        config = EpisodeConfig(seed=17, horizon=5)
        result = run_episode(layout, StayPolicy(), StayPolicy(), config)
        assert result.seed == 17
        assert result.ticks == 5


class TestEventProportions:
    def test_zero_event_flags(self):
        layout = load_layout("solo_pot")
        result = run_episode(layout, StayPolicy(), StayPolicy())
        props = event_proportions(result, layout)
        assert props.no_events == {PlayerId.AI: True, PlayerId.HUMAN: True}
        assert props.fractions[PlayerId.AI] == {}

    def test_placement_only_log_is_a_point_mass(self):
        layout = load_layout("solo_pot")
        proxy = make_proxy(parse_proxy_spec("proxy:placement:onion:all"), layout)
        result = run_episode(layout, StayPolicy(), proxy)
        props = event_proportions(result, layout)
        assert props.fractions[PlayerId.HUMAN] == {("placement", 1): 1.0}
        assert props.no_events[PlayerId.AI]

    def test_pot_restricted_delivery_mass(self):
        layout = load_layout("many_orders")
        spec = PreferenceSpec(Ingredient.ONION, {0, 1, 2}, None)
        conv = truth_convention(ground_truth(spec, layout_facts(layout)))
        ai = ConventionAgent(conv, layout, PlayerId.AI)
        proxy = make_proxy(parse_proxy_spec("proxy:delivery::2"), layout)
        result = run_episode(layout, ai, proxy)
        human = event_proportions(result, layout).fractions[PlayerId.HUMAN]
        assert human
        assert set(human) == {("delivery", 2)}
        assert human[("delivery", 2)] == 1.0

    def test_fractions_sum_to_one_per_agent(self):
        layout = load_layout("many_orders")
        spec = PreferenceSpec(Ingredient.ONION, {0, 1, 2}, {0, 1, 2})
        result = run_episode(layout, *planned_agents(layout, spec))
        props = event_proportions(result, layout)
        for agent, shares in props.fractions.items():
            if props.no_events[agent]:
                assert shares == {}
            else:
                assert abs(sum(shares.values()) - 1.0) < 1e-9

    def test_pot_numbers_are_one_based(self):
        layout = load_layout("many_orders")
        proxy = make_proxy(
            parse_proxy_spec("proxy:placement+delivery:onion:all"), layout)
        result = run_episode(layout, StayPolicy(), proxy)
        keys = event_proportions(result, layout).fractions[PlayerId.HUMAN]
        pots = {n for _, n in keys}
        assert pots == {1, 2, 3}
