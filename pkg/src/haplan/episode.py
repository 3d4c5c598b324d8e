"""Episode rollout and event accounting for two-player kitchens."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

from .kitchen import (
    Action,
    EpisodeConfig,
    Event,
    EventKind,
    GameState,
    Layout,
    PlayerId,
    initial_state,
    layout_facts,
    step_with_events,
)


class Policy(Protocol):
    def act(self, state: GameState, layout: Layout | None = None) -> Action: ...


class StayPolicy:
    """Does nothing, forever."""

    def act(self, state: GameState, layout: Layout | None = None) -> Action:
        return Action.STAY


def act(policy: Policy, state: GameState, layout: Layout) -> Action:
    """Ask a policy for its next action in the given state."""
    return policy.act(state, layout)


@dataclass(frozen=True)
class EpisodeResult:
    score: int
    discounted_return: float
    event_log: tuple[Event, ...]
    seed: int
    ticks: int


def run_episode(layout: Layout, ai_policy: Policy, partner_policy: Policy,
                config: EpisodeConfig = EpisodeConfig()) -> EpisodeResult:
    """Roll a full horizon with both policies acting every tick."""
    state = initial_state(layout)
    events: list[Event] = []
    ret = 0.0
    for t in range(config.horizon):
        actions = {
            PlayerId.AI: act(ai_policy, state, layout),
            PlayerId.HUMAN: act(partner_policy, state, layout),
        }
        state, reward, tick_events = step_with_events(state, layout, actions,
                                                      config)
        events.extend(tick_events)
        ret += (config.discount ** t) * reward
    return EpisodeResult(score=state.score, discounted_return=ret,
                         event_log=tuple(events), seed=config.seed,
                         ticks=config.horizon)


@dataclass(frozen=True)
class EventProportions:
    """Per-agent share of pot work, keyed by (task name, pot number).

    Pot numbers are one-based, matching the instruction language and
    partner labels ("pot 2" is the second pot in reading order).
    Placements count ingredient drops into a pot; deliveries count served
    soups attributed to the pot they were scooped from. Fractions for an
    agent sum to one unless that agent produced no counted events, in
    which case its flag in ``no_events`` is set.
    """

    fractions: dict[PlayerId, dict[tuple[str, int], float]]
    no_events: dict[PlayerId, bool]


_COUNTED = {
    EventKind.PLACE_INGREDIENT: "placement",
    EventKind.DELIVER_SOUP: "delivery",
}


def event_proportions(result: EpisodeResult, layout: Layout) -> EventProportions:
    """Summarize who did which pot's work over an episode."""
    pot_index = {pos: i + 1 for i, pos in enumerate(layout_facts(layout).pots)}
    counts: dict[PlayerId, dict[tuple[str, int], int]] = {
        PlayerId.AI: {}, PlayerId.HUMAN: {},
    }
    for event in result.event_log:
        task = _COUNTED.get(event.kind)
        if task is None or event.pot is None:
            continue
        key = (task, pot_index[event.pot])
        per_agent = counts[event.agent]
        per_agent[key] = per_agent.get(key, 0) + 1
    fractions: dict[PlayerId, dict[tuple[str, int], float]] = {}
    no_events: dict[PlayerId, bool] = {}
    for agent, per_agent in counts.items():
        total = sum(per_agent.values())
        no_events[agent] = total == 0
        if total == 0:
            fractions[agent] = {}
        else:
            fractions[agent] = {k: v / total for k, v in per_agent.items()}
    return EventProportions(fractions=fractions, no_events=no_events)


def proportions_payload(props: EventProportions) -> dict:
    """JSON-ready shape: per agent, a list of (task, pot, fraction) shares."""
    out = {}
    for agent in PlayerId:
        shares = [{"task": task, "pot": pot, "fraction": fraction}
                  for (task, pot), fraction in
                  sorted(props.fractions[agent].items())]
        out[agent.value] = {"shares": shares,
                            "no_events": props.no_events[agent]}
    return out
