"""Scripted partner policies with fixed task preferences.

A proxy partner commits to a slice of the kitchen work (placing a chosen
ingredient, delivering finished soup, or both) restricted to a chosen set
of pots. It never touches work outside its preference, which makes it a
predictable stand-in for a human teammate during evaluation.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum

from .agents import (
    BounceGuard,
    delivery_commands,
    free_counter,
    held_item_kind,
    holds,
    nearest,
)
from .kitchen import (
    Action,
    CleanDish,
    EpisodeConfig,
    GameState,
    GridPos,
    Ingredient,
    Layout,
    PlayerId,
    SoupDish,
    layout_facts,
)
from .skills import (
    SkillCommand,
    SkillItem,
    SkillKind,
    SkillProgress,
    skill_step,
    start_skill,
)


class ProxyTask(Enum):
    PLACEMENT = "placement"
    DELIVERY = "delivery"


class IncompatiblePreference(ValueError):
    """The layout cannot support the requested preference."""


@dataclass(frozen=True)
class ProxyPreference:
    """What a scripted partner is willing to do.

    ``pots`` holds zero-based pot indices in the layout's listing order;
    None means every pot. ``ingredient`` narrows placement work and may be
    None when the kitchen stocks a single ingredient.
    """

    tasks: frozenset[ProxyTask]
    ingredient: Ingredient | None = None
    pots: frozenset[int] | None = None

    def __post_init__(self):
        if not self.tasks:
            raise ValueError("a proxy preference needs at least one task")

    def describe(self) -> str:
        names = [t.value for t in ProxyTask if t in self.tasks]
        text = "+".join(names)
        if self.ingredient is not None:
            text = f"{self.ingredient.value} {text}"
        if self.pots is not None:
            picked = ",".join(str(i + 1) for i in sorted(self.pots))
            text = f"{text} @pot {picked}"
        return text


def parse_proxy_spec(text: str) -> ProxyPreference:
    """Parse ``proxy:<task>[+<task>]:<ingredient>:<pots>`` strings.

    Pots are given one-based (``1,3``) or as ``all``; the ingredient slot
    may be empty. Examples: ``proxy:placement:onion:all``,
    ``proxy:delivery::2``, ``proxy:placement+delivery:tomato:1,2``.
    """
    parts = text.strip().split(":")
    if len(parts) != 4 or parts[0] != "proxy":
        raise ValueError(
            f"bad proxy spec {text!r}: expected proxy:<tasks>:<ingredient>:<pots>")
    try:
        tasks = frozenset(ProxyTask(p) for p in parts[1].split("+"))
    except ValueError:
        raise ValueError(f"bad proxy task list {parts[1]!r}") from None
    ingredient = None
    if parts[2]:
        try:
            ingredient = Ingredient(parts[2])
        except ValueError:
            raise ValueError(f"unknown ingredient {parts[2]!r}") from None
    pots: frozenset[int] | None = None
    if parts[3] not in ("", "all"):
        try:
            indices = [int(p) for p in parts[3].split(",")]
        except ValueError:
            raise ValueError(f"bad pot list {parts[3]!r}") from None
        if any(i < 1 for i in indices):
            raise ValueError("pot numbers start at 1")
        pots = frozenset(i - 1 for i in indices)
    return ProxyPreference(tasks, ingredient, pots)


def render_proxy_spec(pref: ProxyPreference) -> str:
    tasks = "+".join(t.value for t in ProxyTask if t in pref.tasks)
    ingredient = pref.ingredient.value if pref.ingredient else ""
    if pref.pots is None:
        pots = "all"
    else:
        pots = ",".join(str(i + 1) for i in sorted(pref.pots))
    return f"proxy:{tasks}:{ingredient}:{pots}"


class ProxyPolicy:
    """Round-robins its preferred pots, doing only the preferred tasks."""

    def __init__(self, pref: ProxyPreference, layout: Layout,
                 agent: PlayerId = PlayerId.HUMAN,
                 config: EpisodeConfig = EpisodeConfig()):
        self.pref = pref
        self.layout = layout
        self.agent = agent
        self.config = config
        self.facts = layout_facts(layout)
        pot_count = len(self.facts.pots)
        if pref.pots is None:
            indices = list(range(pot_count))
        else:
            indices = sorted(pref.pots)
            bad = [i for i in indices if i >= pot_count]
            if bad:
                raise IncompatiblePreference(
                    f"pot {bad[0] + 1} does not exist (layout has {pot_count})")
        self.pot_list = [self.facts.pots[i] for i in indices]
        self.ingredient = self._resolve_ingredient()
        if ProxyTask.DELIVERY in pref.tasks:
            if not self.facts.dishes or not self.facts.ports:
                raise IncompatiblePreference(
                    "delivery work needs a dish source and a delivery port")
        self.chain: deque[SkillCommand] = deque()
        self.progress: SkillProgress | None = None
        self.guard = BounceGuard()
        self._rotation = 0

    def _resolve_ingredient(self) -> Ingredient | None:
        if ProxyTask.PLACEMENT not in self.pref.tasks:
            return self.pref.ingredient
        if self.pref.ingredient is not None:
            if not self.facts.sources(self.pref.ingredient):
                raise IncompatiblePreference(
                    f"no {self.pref.ingredient.value} source in this kitchen")
            return self.pref.ingredient
        present = self.facts.ingredients_present
        if len(present) != 1:
            raise IncompatiblePreference(
                "placement preference needs an ingredient when the kitchen "
                "stocks more than one")
        return present[0]

    def act(self, state: GameState, layout: Layout | None = None) -> Action:
        for _ in range(16):
            if self.progress is not None:
                action, progress = skill_step(self.layout, state, self.agent,
                                              self.progress)
                if progress.done:
                    self.progress = None
                    continue
                if progress.failed:
                    self.progress = None
                    self.chain.clear()
                    continue
                self.progress = progress
                return self.guard.resolve(self.layout, state, self.agent,
                                          action)
            if not self.chain and not self._select(state):
                return self.guard.resolve(self.layout, state, self.agent,
                                          Action.STAY)
            command = self._next_command(state)
            if command is None:
                continue
            self.progress = start_skill(command)
        return self.guard.resolve(self.layout, state, self.agent, Action.STAY)

    def _next_command(self, state: GameState) -> SkillCommand | None:
        held = state.player(self.agent).held
        while self.chain:
            command = self.chain[0]
            if self._scoop_gone(state, command, held):
                self.chain.clear()
                return None
            self.chain.popleft()
            return command
        return None

    def _scoop_gone(self, state: GameState, command: SkillCommand,
                    held) -> bool:
        scooping = (
            (command.kind is SkillKind.DELIVER and command.item is SkillItem.DISH)
            or (command.kind is SkillKind.FETCH and command.item is SkillItem.SOUP)
        )
        if not scooping or isinstance(held, SoupDish):
            return False
        pot = state.pots.get(command.target)
        return pot is not None and pot.cook_ticks_remaining is None

    def _pots_in_rotation(self) -> list[tuple[int, GridPos]]:
        n = len(self.pot_list)
        order = []
        for k in range(n):
            i = (self._rotation + k) % n
            order.append((i, self.pot_list[i]))
        return order

    def _select(self, state: GameState) -> bool:
        player = state.player(self.agent)
        held = player.held
        if isinstance(held, SoupDish):
            port = nearest(self.facts.ports, player.pos)
            self.chain = deque([SkillCommand(SkillKind.DELIVER, SkillItem.SOUP,
                                             port)])
            return True
        if ProxyTask.DELIVERY in self.pref.tasks:
            for i, pos in self._pots_in_rotation():
                pot = state.pots[pos]
                if pot.cook_ticks_remaining is None:
                    continue
                chain: list[SkillCommand] = []
                if held is not None and not isinstance(held, CleanDish):
                    drop = free_counter(self.layout, state, player.pos)
                    if drop is None:
                        continue
                    chain.append(SkillCommand(SkillKind.DELIVER,
                                              held_item_kind(held), drop))
                dish = nearest(self.facts.dishes, player.pos)
                chain.extend(delivery_commands(dish, pos,
                                               nearest(self.facts.ports, pos)))
                if isinstance(held, CleanDish):
                    chain = chain[1:]
                self.chain = deque(chain)
                self._advance(i)
                return True
        if ProxyTask.PLACEMENT in self.pref.tasks:
            item = SkillItem(self.ingredient.value)
            for i, pos in self._pots_in_rotation():
                pot = state.pots[pos]
                if pot.cook_ticks_remaining is not None:
                    continue
                if len(pot.contents) >= self.config.recipe_size:
                    continue
                chain = []
                if held is not None and not holds(held, item):
                    drop = free_counter(self.layout, state, player.pos)
                    if drop is None:
                        continue
                    chain.append(SkillCommand(SkillKind.DELIVER,
                                              held_item_kind(held), drop))
                source = nearest(self.facts.sources(self.ingredient), player.pos)
                chain.append(SkillCommand(SkillKind.FETCH, item, source))
                chain.append(SkillCommand(SkillKind.DELIVER, item, pos))
                self.chain = deque(chain)
                self._advance(i)
                return True
        return False

    def _advance(self, used_index: int) -> None:
        self._rotation = (used_index + 1) % len(self.pot_list)


def make_proxy(pref: ProxyPreference, layout: Layout,
               agent: PlayerId = PlayerId.HUMAN,
               config: EpisodeConfig = EpisodeConfig()) -> ProxyPolicy:
    """Build a scripted partner, validating the preference against the layout."""
    return ProxyPolicy(pref, layout, agent, config)
