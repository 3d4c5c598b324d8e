"""Deterministic two-player cooperative kitchen on a tile grid.

Coordinates are (row, col) with row 0 at the top. Both players act
simultaneously each tick; the step function is pure and returns the next
state plus the reward earned on that tick.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from typing import Iterable, Mapping, NamedTuple


class GridPos(NamedTuple):
    row: int
    col: int


def manhattan(a: GridPos, b: GridPos) -> int:
    """L1 distance between two grid positions."""
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


class Tile(Enum):
    FLOOR = " "
    COUNTER = "X"
    ONION_SOURCE = "O"
    TOMATO_SOURCE = "T"
    DISH_SOURCE = "D"
    POT = "P"
    SERVING_PORT = "S"


_CHAR_TILES = {t.value: t for t in Tile}


class Ingredient(Enum):
    ONION = "onion"
    TOMATO = "tomato"

    @property
    def plural(self) -> str:
        return "onions" if self is Ingredient.ONION else "tomatoes"


SOURCE_TILES = {
    Ingredient.ONION: Tile.ONION_SOURCE,
    Ingredient.TOMATO: Tile.TOMATO_SOURCE,
}


class Direction(Enum):
    NORTH = (-1, 0)
    SOUTH = (1, 0)
    WEST = (0, -1)
    EAST = (0, 1)

    def step_from(self, pos: GridPos) -> GridPos:
        dr, dc = self.value
        return GridPos(pos.row + dr, pos.col + dc)


class Action(Enum):
    UP = "up"
    DOWN = "down"
    LEFT = "left"
    RIGHT = "right"
    STAY = "stay"
    INTERACT = "interact"


MOVE_DIRECTIONS = {
    Action.UP: Direction.NORTH,
    Action.DOWN: Direction.SOUTH,
    Action.LEFT: Direction.WEST,
    Action.RIGHT: Direction.EAST,
}

DIRECTION_ACTIONS = {d: a for a, d in MOVE_DIRECTIONS.items()}


class PlayerId(Enum):
    AI = "ai"
    HUMAN = "human"

    @property
    def other(self) -> "PlayerId":
        return PlayerId.HUMAN if self is PlayerId.AI else PlayerId.AI


# ---------------------------------------------------------------------------
# Held items
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RawIngredient:
    ingredient: Ingredient


@dataclass(frozen=True)
class CleanDish:
    pass


@dataclass(frozen=True)
class SoupDish:
    """A plated soup; ``origin`` remembers which pot it was scooped from."""

    recipe: tuple[Ingredient, ...]
    origin: GridPos

    def __post_init__(self) -> None:
        object.__setattr__(self, "recipe", tuple(sorted(self.recipe, key=lambda i: i.value)))


Item = RawIngredient | CleanDish | SoupDish


@dataclass(frozen=True)
class PotState:
    contents: tuple[Ingredient, ...] = ()
    cook_ticks_remaining: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "contents", tuple(sorted(self.contents, key=lambda i: i.value)))

    @property
    def is_cooking(self) -> bool:
        return self.cook_ticks_remaining is not None and self.cook_ticks_remaining > 0

    @property
    def is_ready(self) -> bool:
        return self.cook_ticks_remaining == 0


@dataclass(frozen=True)
class PlayerState:
    id: PlayerId
    pos: GridPos
    facing: Direction
    held: Item | None = None


@dataclass(frozen=True)
class GameState:
    tick: int
    players: tuple[PlayerState, PlayerState]
    pots: dict[GridPos, PotState]
    counter_items: dict[GridPos, Item]
    score: int = 0

    def player(self, pid: PlayerId) -> PlayerState:
        for p in self.players:
            if p.id is pid:
                return p
        raise KeyError(pid)


@dataclass(frozen=True)
class EpisodeConfig:
    horizon: int = 400
    discount: float = 1.0
    score_per_soup: int = 20
    recipe_size: int = 3
    cook_time: int = 20
    seed: int = 0


# ---------------------------------------------------------------------------
# Layouts
# ---------------------------------------------------------------------------


class LayoutError(ValueError):
    """A layout string violates the grid rules."""


class NonRectangular(LayoutError):
    pass


class UnknownCharacter(LayoutError):
    def __init__(self, char: str, pos: GridPos):
        super().__init__(f"unknown layout character {char!r} at {tuple(pos)}")
        self.char = char
        self.pos = pos


class MissingSpawn(LayoutError):
    pass


class DisconnectedFloor(LayoutError):
    pass


class MissingTile(LayoutError):
    def __init__(self, what: str):
        super().__init__(f"layout has no {what}")
        self.what = what


@dataclass(frozen=True)
class Layout:
    name: str
    tiles: tuple[tuple[Tile, ...], ...]
    spawns: tuple[GridPos, GridPos]

    @property
    def height(self) -> int:
        return len(self.tiles)

    @property
    def width(self) -> int:
        return len(self.tiles[0])

    def in_bounds(self, pos: GridPos) -> bool:
        return 0 <= pos.row < self.height and 0 <= pos.col < self.width

    def tile(self, pos: GridPos) -> Tile:
        return self.tiles[pos.row][pos.col]

    def is_floor(self, pos: GridPos) -> bool:
        return self.in_bounds(pos) and self.tile(pos) is Tile.FLOOR

    def positions(self, kind: Tile) -> list[GridPos]:
        """All positions of a tile kind, in reading order."""
        return [
            GridPos(r, c)
            for r, row in enumerate(self.tiles)
            for c, t in enumerate(row)
            if t is kind
        ]

    @property
    def pots(self) -> list[GridPos]:
        return self.positions(Tile.POT)


def parse_layout(text: str, name: str = "custom") -> Layout:
    """Parse an ASCII grid into a Layout, validating every grid rule.

    Alphabet: ``X`` counter, ``O`` onion source, ``T`` tomato source,
    ``D`` dish source, ``P`` pot, ``S`` serving port, ``1``/``2`` player
    spawn markers (floor underneath), space floor.
    """
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise NonRectangular("empty layout")
    width = len(lines[0])
    if any(len(line) != width for line in lines):
        raise NonRectangular("rows have unequal lengths")

    rows: list[list[Tile]] = []
    spawn1: GridPos | None = None
    spawn2: GridPos | None = None
    for r, line in enumerate(lines):
        row: list[Tile] = []
        for c, ch in enumerate(line):
            if ch == "1":
                if spawn1 is not None:
                    raise MissingSpawn("duplicate player 1 spawn")
                spawn1 = GridPos(r, c)
                row.append(Tile.FLOOR)
            elif ch == "2":
                if spawn2 is not None:
                    raise MissingSpawn("duplicate player 2 spawn")
                spawn2 = GridPos(r, c)
                row.append(Tile.FLOOR)
            elif ch in _CHAR_TILES:
                row.append(_CHAR_TILES[ch])
            else:
                raise UnknownCharacter(ch, GridPos(r, c))
        rows.append(row)
    if spawn1 is None or spawn2 is None:
        raise MissingSpawn("layout needs exactly one '1' and one '2' spawn marker")

    layout = Layout(name=name, tiles=tuple(tuple(r) for r in rows), spawns=(spawn1, spawn2))

    for r in range(layout.height):
        for c in (0, layout.width - 1):
            if layout.tiles[r][c] is Tile.FLOOR:
                raise LayoutError(f"boundary tile at ({r},{c}) is walkable")
    for c in range(layout.width):
        for r in (0, layout.height - 1):
            if layout.tiles[r][c] is Tile.FLOOR:
                raise LayoutError(f"boundary tile at ({r},{c}) is walkable")

    floors = {GridPos(r, c) for r in range(layout.height) for c in range(layout.width)
              if layout.tiles[r][c] is Tile.FLOOR}
    seen = {spawn1}
    queue = deque([spawn1])
    while queue:
        pos = queue.popleft()
        for d in Direction:
            nxt = d.step_from(pos)
            if nxt in floors and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    if seen != floors:
        raise DisconnectedFloor("not all floor tiles are mutually reachable")

    if not layout.positions(Tile.POT):
        raise MissingTile("pot")
    if not layout.positions(Tile.SERVING_PORT):
        raise MissingTile("serving port")
    if not layout.positions(Tile.DISH_SOURCE):
        raise MissingTile("dish source")
    if not (layout.positions(Tile.ONION_SOURCE) or layout.positions(Tile.TOMATO_SOURCE)):
        raise MissingTile("ingredient source")
    for pot in layout.pots:
        if not any(layout.is_floor(d.step_from(pot)) for d in Direction):
            raise LayoutError(f"pot at {tuple(pot)} has no adjacent floor tile")
    return layout


def render_layout(layout: Layout) -> str:
    """Inverse of parse_layout: the ASCII grid with spawn markers."""
    grid = [[t.value for t in row] for row in layout.tiles]
    for marker, pos in zip("12", layout.spawns):
        grid[pos.row][pos.col] = marker
    return "\n".join("".join(row) for row in grid)


def _layout_dir():
    return resources.files("haplan") / "assets" / "layouts"


def available_layouts() -> list[str]:
    """Names of the bundled layout assets."""
    return sorted(p.name[: -len(".txt")] for p in _layout_dir().iterdir()
                  if p.name.endswith(".txt"))


def load_layout(name: str) -> Layout:
    """Load a bundled layout by name."""
    path = _layout_dir() / f"{name}.txt"
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise KeyError(f"no bundled layout named {name!r}") from None
    return parse_layout(text, name=name)


@dataclass(frozen=True)
class LayoutFacts:
    """Coordinate lists the planner talks about.

    Pots are in reading order (the order pot 1, pot 2, ... refers to).
    Item sources and ports are column-major so that left-hand sources come
    first; ties between equally near sources go to the first listed.
    """

    pots: tuple[GridPos, ...]
    onions: tuple[GridPos, ...]
    tomatoes: tuple[GridPos, ...]
    dishes: tuple[GridPos, ...]
    ports: tuple[GridPos, ...]

    def sources(self, ingredient: Ingredient) -> tuple[GridPos, ...]:
        return self.onions if ingredient is Ingredient.ONION else self.tomatoes

    @property
    def ingredients_present(self) -> tuple[Ingredient, ...]:
        out = []
        if self.onions:
            out.append(Ingredient.ONION)
        if self.tomatoes:
            out.append(Ingredient.TOMATO)
        return tuple(out)


def _column_major(positions: Iterable[GridPos]) -> tuple[GridPos, ...]:
    return tuple(sorted(positions, key=lambda p: (p.col, p.row)))


def layout_facts(layout: Layout) -> LayoutFacts:
    """Extract the coordinate lists used for planning and instructions."""
    return LayoutFacts(
        pots=tuple(layout.positions(Tile.POT)),
        onions=_column_major(layout.positions(Tile.ONION_SOURCE)),
        tomatoes=_column_major(layout.positions(Tile.TOMATO_SOURCE)),
        dishes=_column_major(layout.positions(Tile.DISH_SOURCE)),
        ports=_column_major(layout.positions(Tile.SERVING_PORT)),
    )


# ---------------------------------------------------------------------------
# Dynamics
# ---------------------------------------------------------------------------


class EventKind(Enum):
    PICKUP_INGREDIENT = "pickup_ingredient"
    PLACE_INGREDIENT = "place_ingredient"
    PICKUP_DISH = "pickup_dish"
    SCOOP_SOUP = "scoop_soup"
    DELIVER_SOUP = "deliver_soup"
    PLACE_ON_COUNTER = "place_on_counter"
    PICKUP_FROM_COUNTER = "pickup_from_counter"


@dataclass(frozen=True)
class Event:
    tick: int
    agent: PlayerId
    kind: EventKind
    pos: GridPos
    item: str | None = None
    pot: GridPos | None = None


def initial_state(layout: Layout) -> GameState:
    """Both players at their spawns, facing south, hands empty, pots empty."""
    players = tuple(
        PlayerState(id=pid, pos=pos, facing=Direction.SOUTH)
        for pid, pos in zip((PlayerId.AI, PlayerId.HUMAN), layout.spawns)
    )
    return GameState(
        tick=0,
        players=players,  # type: ignore[arg-type]
        pots={pos: PotState() for pos in layout.pots},
        counter_items={},
    )


def _resolve_moves(
    layout: Layout,
    players: tuple[PlayerState, PlayerState],
    actions: Mapping[PlayerId, Action],
) -> list[PlayerState]:
    moved: list[PlayerState] = []
    for p in players:
        act = actions.get(p.id, Action.STAY)
        direction = MOVE_DIRECTIONS.get(act)
        if direction is None:
            moved.append(p)
            continue
        target = direction.step_from(p.pos)
        if not layout.is_floor(target):
            target = p.pos
        moved.append(replace(p, pos=target, facing=direction))

    a, b = players
    na, nb = moved
    if na.pos == nb.pos:
        # Same destination (including moving into a tile the other could not
        # leave): neither advances, facings keep their new values.
        na, nb = replace(na, pos=a.pos), replace(nb, pos=b.pos)
    elif na.pos == b.pos and nb.pos == a.pos:
        # Position swap is blocked.
        na, nb = replace(na, pos=a.pos), replace(nb, pos=b.pos)
    return [na, nb]


def _interact(
    layout: Layout,
    player: PlayerState,
    pots: dict[GridPos, PotState],
    counters: dict[GridPos, Item],
    config: EpisodeConfig,
    tick: int,
    events: list[Event],
) -> tuple[PlayerState, int]:
    """Apply one player's interact; returns the updated player and reward."""
    target = player.facing.step_from(player.pos)
    if not layout.in_bounds(target):
        return player, 0
    tile = layout.tile(target)
    held = player.held

    if tile in (Tile.ONION_SOURCE, Tile.TOMATO_SOURCE):
        if held is None:
            ing = Ingredient.ONION if tile is Tile.ONION_SOURCE else Ingredient.TOMATO
            events.append(Event(tick, player.id, EventKind.PICKUP_INGREDIENT, target, ing.value))
            return replace(player, held=RawIngredient(ing)), 0

    elif tile is Tile.DISH_SOURCE:
        if held is None:
            events.append(Event(tick, player.id, EventKind.PICKUP_DISH, target, "dish"))
            return replace(player, held=CleanDish()), 0

    elif tile is Tile.POT:
        pot = pots[target]
        if isinstance(held, RawIngredient):
            if pot.cook_ticks_remaining is None and len(pot.contents) < config.recipe_size:
                contents = pot.contents + (held.ingredient,)
                timer = config.cook_time if len(contents) == config.recipe_size else None
                pots[target] = PotState(contents, timer)
                events.append(Event(tick, player.id, EventKind.PLACE_INGREDIENT, target,
                                    held.ingredient.value, pot=target))
                return replace(player, held=None), 0
        elif isinstance(held, CleanDish) and pot.is_ready:
            soup = SoupDish(recipe=pot.contents, origin=target)
            pots[target] = PotState()
            events.append(Event(tick, player.id, EventKind.SCOOP_SOUP, target, "soup", pot=target))
            return replace(player, held=soup), 0

    elif tile is Tile.SERVING_PORT:
        if isinstance(held, SoupDish):
            events.append(Event(tick, player.id, EventKind.DELIVER_SOUP, target, "soup",
                                pot=held.origin))
            return replace(player, held=None), config.score_per_soup

    elif tile is Tile.COUNTER:
        if held is not None and target not in counters:
            counters[target] = held
            events.append(Event(tick, player.id, EventKind.PLACE_ON_COUNTER, target,
                                _item_name(held)))
            return replace(player, held=None), 0
        if held is None and target in counters:
            item = counters.pop(target)
            events.append(Event(tick, player.id, EventKind.PICKUP_FROM_COUNTER, target,
                                _item_name(item)))
            return replace(player, held=item), 0

    return player, 0


def _item_name(item: Item) -> str:
    if isinstance(item, RawIngredient):
        return item.ingredient.value
    if isinstance(item, CleanDish):
        return "dish"
    return "soup"


def step_with_events(
    state: GameState,
    layout: Layout,
    actions: Mapping[PlayerId, Action],
    config: EpisodeConfig = EpisodeConfig(),
) -> tuple[GameState, int, list[Event]]:
    """Advance one tick.

    Order within a tick: cooking timers count down first, then both moves
    resolve simultaneously, then interacts apply in player order (AI first).
    A pot whose third ingredient lands at tick t is therefore scoopable at
    tick t+cook_time and not one tick earlier.
    """
    events: list[Event] = []
    pots = {
        pos: replace(p, cook_ticks_remaining=p.cook_ticks_remaining - 1) if p.is_cooking else p
        for pos, p in state.pots.items()
    }
    counters = dict(state.counter_items)

    players = _resolve_moves(layout, state.players, actions)
    reward = 0
    for i, player in enumerate(players):
        if actions.get(player.id, Action.STAY) is Action.INTERACT:
            players[i], r = _interact(layout, player, pots, counters, config,
                                      state.tick, events)
            reward += r

    new_state = GameState(
        tick=state.tick + 1,
        players=(players[0], players[1]),
        pots=pots,
        counter_items=counters,
        score=state.score + reward,
    )
    return new_state, reward, events


def step(
    state: GameState,
    layout: Layout,
    actions: Mapping[PlayerId, Action],
    config: EpisodeConfig = EpisodeConfig(),
) -> tuple[GameState, int]:
    """Advance one tick; see step_with_events for the in-tick ordering."""
    new_state, reward, _ = step_with_events(state, layout, actions, config)
    return new_state, reward
