"""Fetch/Deliver skills: tile-level navigation plus object interaction.

A skill command names one interaction ("Fetch Onion at (2,1)") and the
executor turns it into per-tick actions: walk adjacent to the target tile,
face it, interact, and report Done or a typed failure.
"""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum

from .kitchen import (
    Action,
    CleanDish,
    Direction,
    GameState,
    GridPos,
    Ingredient,
    Item,
    Layout,
    MOVE_DIRECTIONS,
    PlayerId,
    PotState,
    RawIngredient,
    SoupDish,
    Tile,
)


class SkillKind(Enum):
    FETCH = "fetch"
    DELIVER = "deliver"


class SkillItem(Enum):
    ONION = "onion"
    TOMATO = "tomato"
    DISH = "dish"
    SOUP = "soup"


@dataclass(frozen=True)
class SkillCommand:
    kind: SkillKind
    item: SkillItem
    target: GridPos


class SkillPhase(Enum):
    NAVIGATING = "navigating"
    INTERACTING = "interacting"
    DONE = "done"
    FAILED = "failed"


class FailReason(Enum):
    UNREACHABLE = "unreachable"
    PRECONDITION_LOST = "precondition_lost"


@dataclass(frozen=True)
class SkillProgress:
    command: SkillCommand
    phase: SkillPhase = SkillPhase.NAVIGATING
    reason: FailReason | None = None
    waited: int = 0

    @property
    def done(self) -> bool:
        return self.phase is SkillPhase.DONE

    @property
    def failed(self) -> bool:
        return self.phase is SkillPhase.FAILED


def start_skill(command: SkillCommand) -> SkillProgress:
    return SkillProgress(command=command)


class Unreachable(Exception):
    """No walkable path reaches a tile adjacent to the goal."""


WAIT_BUDGET = 3


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


class ParseError(ValueError):
    """Skill text did not match the command grammar."""

    def __init__(self, message: str, position: int, expected: str):
        super().__init__(f"{message} at position {position} (expected {expected})")
        self.position = position
        self.expected = expected


_VERBS = {"fetch": SkillKind.FETCH, "deliver": SkillKind.DELIVER}
_ITEMS = {
    "onion": SkillItem.ONION,
    "tomato": SkillItem.TOMATO,
    "dish": SkillItem.DISH,
    "plate": SkillItem.DISH,
    "soup": SkillItem.SOUP,
}
_COORD_RX = re.compile(r"\(\s*(\d+)\s*,\s*(\d+)\s*\)")


def parse_skill(text: str) -> SkillCommand:
    """Parse "Fetch <item> at (r,c)" / "Deliver <item> to (r,c)"."""
    s = text.strip().lower()
    m = re.match(r"(fetch|deliver)\b", s)
    if not m:
        raise ParseError("unknown verb", 0, "Fetch or Deliver")
    kind = _VERBS[m.group(1)]
    rest = s[m.end():].lstrip()
    pos = len(text) - len(rest)

    rest = re.sub(r"^(the|a|an)\s+", "", rest)
    im = re.match(r"(?:(?:onion|tomato)\s+)?(onion|tomato|dish|plate|soup)(?:e?s)?\b", rest)
    if not im:
        raise ParseError("unknown item", pos, "onion, tomato, dish, or soup")
    item = _ITEMS[im.group(1)]
    rest = rest[im.end():].lstrip()

    rest = re.sub(r"^(at|to|from|into|in)\s+", "", rest)
    cm = _COORD_RX.match(rest)
    if not cm:
        raise ParseError("missing coordinate", len(text) - len(rest), "(row, col)")
    target = GridPos(int(cm.group(1)), int(cm.group(2)))
    return SkillCommand(kind=kind, item=item, target=target)


def render_skill(command: SkillCommand) -> str:
    word = command.item.value.capitalize()
    prep = "at" if command.kind is SkillKind.FETCH else "to"
    verb = "Fetch" if command.kind is SkillKind.FETCH else "Deliver"
    return f"{verb} {word} {prep} ({command.target.row}, {command.target.col})"


# ---------------------------------------------------------------------------
# Path planning
# ---------------------------------------------------------------------------


def direction_toward(pos: GridPos, target: GridPos) -> Direction | None:
    """The facing that points from pos to an adjacent target, if any."""
    for d in Direction:
        if d.step_from(pos) == target:
            return d
    return None


def plan_path(
    layout: Layout,
    state: GameState,
    from_pos: GridPos,
    goal: GridPos,
    facing: Direction | None = None,
) -> list[Action]:
    """Shortest action sequence ending adjacent to goal and facing it.

    Search runs over (position, facing) pairs: a move into a blocked tile
    still turns the player, so facing changes cost one tick. The other
    player's current tile is treated as blocked. Returns [] when already
    adjacent and facing; raises Unreachable when no path exists.
    """
    if facing is None:
        for p in state.players:
            if p.pos == from_pos:
                facing = p.facing
                break
    blocked = {p.pos for p in state.players if p.pos != from_pos}

    def is_goal(pos: GridPos, face: Direction | None) -> bool:
        return face is not None and face.step_from(pos) == goal

    if is_goal(from_pos, facing):
        return []
    start = (from_pos, facing)
    came: dict[tuple, tuple] = {start: (None, None)}
    queue = deque([start])
    while queue:
        pos, face = queue.popleft()
        for action, direction in MOVE_DIRECTIONS.items():
            target = direction.step_from(pos)
            nxt_pos = target if (layout.is_floor(target) and target not in blocked) else pos
            nxt = (nxt_pos, direction)
            if nxt in came:
                continue
            came[nxt] = ((pos, face), action)
            if is_goal(nxt_pos, direction):
                path: list[Action] = []
                cur = nxt
                while came[cur][0] is not None:
                    prev, act = came[cur]
                    path.append(act)
                    cur = prev
                path.reverse()
                return path
            queue.append(nxt)
    raise Unreachable(f"no path from {tuple(from_pos)} to a tile facing {tuple(goal)}")


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


def _holds(item: Item | None, skill_item: SkillItem) -> bool:
    if skill_item is SkillItem.ONION:
        return isinstance(item, RawIngredient) and item.ingredient is Ingredient.ONION
    if skill_item is SkillItem.TOMATO:
        return isinstance(item, RawIngredient) and item.ingredient is Ingredient.TOMATO
    if skill_item is SkillItem.DISH:
        return isinstance(item, CleanDish)
    return isinstance(item, SoupDish)


_FETCH_TILES = {
    SkillItem.ONION: {Tile.ONION_SOURCE, Tile.COUNTER},
    SkillItem.TOMATO: {Tile.TOMATO_SOURCE, Tile.COUNTER},
    SkillItem.DISH: {Tile.DISH_SOURCE, Tile.COUNTER},
    SkillItem.SOUP: {Tile.POT, Tile.COUNTER},
}
_DELIVER_TILES = {
    SkillItem.ONION: {Tile.POT, Tile.COUNTER},
    SkillItem.TOMATO: {Tile.POT, Tile.COUNTER},
    SkillItem.DISH: {Tile.POT, Tile.COUNTER},
    SkillItem.SOUP: {Tile.SERVING_PORT, Tile.COUNTER},
}


def _fail(progress: SkillProgress, reason: FailReason) -> tuple[Action, SkillProgress]:
    return Action.STAY, replace(progress, phase=SkillPhase.FAILED, reason=reason)


def skill_step(
    layout: Layout,
    state: GameState,
    agent: PlayerId,
    progress: SkillProgress,
) -> tuple[Action, SkillProgress]:
    """One tick of skill execution: the action to take plus updated progress.

    Completion is observed on the call after the interact lands, so callers
    should check ``progress.done`` before asking for an action.
    """
    if progress.phase in (SkillPhase.DONE, SkillPhase.FAILED):
        return Action.STAY, progress

    cmd = progress.command
    player = state.player(agent)
    held = player.held

    if not layout.in_bounds(cmd.target):
        return _fail(progress, FailReason.PRECONDITION_LOST)
    tile = layout.tile(cmd.target)
    allowed = _FETCH_TILES[cmd.item] if cmd.kind is SkillKind.FETCH else _DELIVER_TILES[cmd.item]
    if tile not in allowed:
        return _fail(progress, FailReason.PRECONDITION_LOST)
    pot = state.pots.get(cmd.target) if tile is Tile.POT else None

    if cmd.kind is SkillKind.FETCH:
        if _holds(held, cmd.item):
            return Action.STAY, replace(progress, phase=SkillPhase.DONE)
        if cmd.item is SkillItem.SOUP and tile is Tile.POT:
            # scooping needs a clean dish in hand
            if not isinstance(held, CleanDish):
                return _fail(progress, FailReason.PRECONDITION_LOST)
        elif held is not None:
            return _fail(progress, FailReason.PRECONDITION_LOST)
    else:
        done_after_interact = (
            held is None
            or (cmd.item is SkillItem.DISH and tile is Tile.POT and isinstance(held, SoupDish))
        )
        if progress.phase is SkillPhase.INTERACTING and done_after_interact:
            return Action.STAY, replace(progress, phase=SkillPhase.DONE)
        if not _holds(held, cmd.item):
            return _fail(progress, FailReason.PRECONDITION_LOST)

    # tile-state preconditions and waits
    if tile is Tile.POT and pot is not None:
        full = len(pot.contents) >= 1 and pot.cook_ticks_remaining is not None
        if cmd.kind is SkillKind.FETCH and cmd.item is SkillItem.SOUP:
            if not full:
                return _fail(progress, FailReason.PRECONDITION_LOST)
        if cmd.kind is SkillKind.DELIVER and cmd.item in (SkillItem.ONION, SkillItem.TOMATO):
            if full:
                return _fail(progress, FailReason.PRECONDITION_LOST)
    if tile is Tile.COUNTER:
        on_counter = state.counter_items.get(cmd.target)
        if cmd.kind is SkillKind.FETCH and not _holds(on_counter, cmd.item):
            return _fail(progress, FailReason.PRECONDITION_LOST)
        if cmd.kind is SkillKind.DELIVER and on_counter is not None:
            return _fail(progress, FailReason.PRECONDITION_LOST)

    facing_target = direction_toward(player.pos, cmd.target)
    if facing_target is None or player.facing is not facing_target:
        try:
            path = plan_path(layout, state, player.pos, cmd.target, player.facing)
        except Unreachable:
            waited = progress.waited + 1
            if waited > WAIT_BUDGET:
                return _fail(progress, FailReason.UNREACHABLE)
            return Action.STAY, replace(progress, waited=waited)
        return path[0], replace(progress, phase=SkillPhase.NAVIGATING, waited=0)

    # in position: wait out a cooking pot when the interact needs it ready
    if pot is not None and not pot.is_ready:
        waiting_scoop = (
            (cmd.kind is SkillKind.FETCH and cmd.item is SkillItem.SOUP)
            or (cmd.kind is SkillKind.DELIVER and cmd.item is SkillItem.DISH)
        )
        if waiting_scoop:
            return Action.STAY, replace(progress, phase=SkillPhase.NAVIGATING, waited=0)
    return Action.INTERACT, replace(progress, phase=SkillPhase.INTERACTING, waited=0)
