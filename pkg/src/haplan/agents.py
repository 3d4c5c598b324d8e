"""Agents that execute work plans tick by tick.

A ConventionAgent walks one side of an agreed Convention: each plan step
expands into skill commands (a fetch step fills its pot with a full recipe,
a delivery step runs the dish-scoop-serve chain) and the agent launches
steps as their pots become actionable, skipping work a partner already did.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .convention import Convention, FetchPlan, WorkKind
from .kitchen import (
    MOVE_DIRECTIONS,
    Action,
    CleanDish,
    EpisodeConfig,
    GameState,
    GridPos,
    Ingredient,
    Item,
    Layout,
    PlayerId,
    RawIngredient,
    SoupDish,
    Tile,
    manhattan,
)
from .skills import (
    SkillCommand,
    SkillItem,
    SkillKind,
    SkillProgress,
    Unreachable,
    plan_path,
    skill_step,
    start_skill,
)

_INGREDIENT_ITEMS = {
    Ingredient.ONION: SkillItem.ONION,
    Ingredient.TOMATO: SkillItem.TOMATO,
}

_ACT_BOUND = 16


def held_item_kind(item: Item) -> SkillItem:
    if isinstance(item, RawIngredient):
        return _INGREDIENT_ITEMS[item.ingredient]
    if isinstance(item, CleanDish):
        return SkillItem.DISH
    return SkillItem.SOUP


def holds(item: Item | None, skill_item: SkillItem) -> bool:
    return item is not None and held_item_kind(item) is skill_item


def nearest(positions, to: GridPos) -> GridPos:
    """Closest position by manhattan distance, first-listed on ties."""
    best = None
    best_d = None
    for pos in positions:
        d = manhattan(pos, to)
        if best_d is None or d < best_d:
            best, best_d = pos, d
    if best is None:
        raise ValueError("no candidate positions")
    return best


def free_counter(layout: Layout, state: GameState, near: GridPos) -> GridPos | None:
    """Closest empty counter the player at ``near`` can actually walk to."""
    candidates = [pos for pos in layout.positions(Tile.COUNTER)
                  if pos not in state.counter_items]
    candidates.sort(key=lambda pos: manhattan(pos, near))
    for pos in candidates:
        try:
            plan_path(layout, state, near, pos)
        except Unreachable:
            continue
        return pos
    return None


@dataclass
class BounceGuard:
    """Breaks symmetric move deadlocks between the two players.

    When both players step toward the same cell the engine cancels both
    moves, and two re-planning agents can shove at each other forever
    because each still sees a valid path. The guard watches for a move
    repeated from an unchanged position and has the AI player sidestep
    once; the other player holds course, so the contested cell clears.
    """

    last_pos: GridPos | None = None
    last_action: Action = Action.STAY

    def resolve(self, layout: Layout, state: GameState, agent: PlayerId,
                action: Action) -> Action:
        pos = state.player(agent).pos
        direction = MOVE_DIRECTIONS.get(action)
        bounced = (direction is not None and agent is PlayerId.AI
                   and action is self.last_action and pos == self.last_pos)
        if bounced:
            action = _sidestep(layout, state, agent, pos,
                               direction.step_from(pos))
        self.last_pos = pos
        self.last_action = action
        return action


def _sidestep(layout: Layout, state: GameState, agent: PlayerId,
              pos: GridPos, contested: GridPos) -> Action:
    """First open move off a contested cell, in a fixed direction order."""
    partner = next(p.pos for p in state.players if p.id is not agent)
    for alt, direction in MOVE_DIRECTIONS.items():
        cell = direction.step_from(pos)
        if cell == contested or cell == partner:
            continue
        if layout.is_floor(cell):
            return alt
    return Action.STAY


def fetch_commands(ingredient: Ingredient, source: GridPos, pot: GridPos,
                   recipe_size: int) -> list[SkillCommand]:
    """The full vegetable-picking unit: one round trip per recipe slot."""
    item = _INGREDIENT_ITEMS[ingredient]
    out: list[SkillCommand] = []
    for _ in range(recipe_size):
        out.append(SkillCommand(SkillKind.FETCH, item, source))
        out.append(SkillCommand(SkillKind.DELIVER, item, pot))
    return out


def delivery_commands(dish_source: GridPos, pot: GridPos,
                      port: GridPos) -> list[SkillCommand]:
    """The four-skill serving chain: dish, scoop, soup in hand, serve."""
    return [
        SkillCommand(SkillKind.FETCH, SkillItem.DISH, dish_source),
        SkillCommand(SkillKind.DELIVER, SkillItem.DISH, pot),
        SkillCommand(SkillKind.FETCH, SkillItem.SOUP, pot),
        SkillCommand(SkillKind.DELIVER, SkillItem.SOUP, port),
    ]


@dataclass
class _Unit:
    kind: WorkKind
    pot: GridPos
    commands: deque[SkillCommand] = field(default_factory=deque)


class ConventionAgent:
    """Drives one agent's plan from an accepted Convention."""

    def __init__(self, convention: Convention, layout: Layout,
                 agent: PlayerId = PlayerId.AI,
                 config: EpisodeConfig = EpisodeConfig()):
        self.layout = layout
        self.agent = agent
        self.config = config
        self.units: list[_Unit] = [self._expand(step) for step
                                   in convention.plan_for(agent)]
        self.current: _Unit | None = None
        self.progress: SkillProgress | None = None
        self.guard = BounceGuard()

    def _expand(self, step) -> _Unit:
        refined = step.refined
        if isinstance(refined, FetchPlan):
            commands = fetch_commands(refined.ingredient, refined.source,
                                      refined.pot, self.config.recipe_size)
            return _Unit(WorkKind.FETCH, refined.pot, deque(commands))
        commands = delivery_commands(refined.dish_source, refined.pot, refined.port)
        return _Unit(WorkKind.DELIVER, refined.pot, deque(commands))

    @property
    def idle(self) -> bool:
        return self.current is None and self.progress is None and not self.units

    def act(self, state: GameState, layout: Layout | None = None) -> Action:
        for _ in range(_ACT_BOUND):
            if self.progress is not None:
                action, progress = skill_step(self.layout, state, self.agent,
                                              self.progress)
                if progress.done or progress.failed:
                    self.progress = None
                    continue
                self.progress = progress
                return self.guard.resolve(self.layout, state, self.agent,
                                          action)
            if self.current is None and not self._select(state):
                return self.guard.resolve(self.layout, state, self.agent,
                                          Action.STAY)
            command = self._next_command(state)
            if command is None:
                self.current = None
                continue
            self.progress = start_skill(command)
        return self.guard.resolve(self.layout, state, self.agent, Action.STAY)

    def _select(self, state: GameState) -> bool:
        """Start the first actionable unit, in scheduled order.

        A fetch unit whose pot is already cooking was done by the partner
        and is dropped; a delivery unit waits until its pot has been filled
        but does not block later units behind it.
        """
        i = 0
        while i < len(self.units):
            unit = self.units[i]
            pot = state.pots.get(unit.pot)
            if pot is None:
                del self.units[i]
                continue
            if unit.kind is WorkKind.FETCH:
                if pot.cook_ticks_remaining is not None:
                    del self.units[i]
                    continue
                del self.units[i]
                self.current = unit
                return True
            if pot.cook_ticks_remaining is not None:
                del self.units[i]
                self.current = unit
                return True
            i += 1
        return False

    def _next_command(self, state: GameState) -> SkillCommand | None:
        unit = self.current
        if unit is None:
            return None
        pot = state.pots.get(unit.pot)
        if (unit.kind is WorkKind.FETCH and pot is not None
                and pot.cook_ticks_remaining is not None):
            unit.commands.clear()
        held = state.player(self.agent).held
        while unit.commands:
            command = unit.commands[0]
            if _scoop_gone(self.layout, state, command, held):
                unit.commands.clear()
                break
            disposal = _disposal_for(self.layout, state,
                                     state.player(self.agent).pos, held, command)
            if disposal is not None:
                return disposal
            unit.commands.popleft()
            return command
        return None


def _scoop_gone(layout: Layout, state: GameState, command: SkillCommand,
                held: Item | None) -> bool:
    """True when a scoop-bound command points at a pot that was emptied."""
    if layout.tile(command.target) is not Tile.POT:
        return False
    scooping = (
        (command.kind is SkillKind.DELIVER and command.item is SkillItem.DISH)
        or (command.kind is SkillKind.FETCH and command.item is SkillItem.SOUP)
    )
    if not scooping or isinstance(held, SoupDish):
        return False
    pot = state.pots[command.target]
    return pot.cook_ticks_remaining is None


def _disposal_for(layout: Layout, state: GameState, pos: GridPos,
                  held: Item | None, command: SkillCommand) -> SkillCommand | None:
    """A counter drop-off when the hand blocks the next fetch."""
    if held is None or command.kind is not SkillKind.FETCH:
        return None
    if command.item is SkillItem.SOUP:
        compatible = isinstance(held, (CleanDish, SoupDish))
    else:
        compatible = holds(held, command.item)
    if compatible:
        return None
    target = free_counter(layout, state, pos)
    if target is None:
        return None
    return SkillCommand(SkillKind.DELIVER, held_item_kind(held), target)
