"""Deterministic planning logic: the ground truth the sessions are graded on.

Implements pot resolution, complement work assignment, nearest-source
refinement, the time formulas, and cook-wait scheduling, plus a template
instruction grammar whose generator and interpreter are exact inverses.
"""
from __future__ import annotations

import random
import re
from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from .convention import (
    ConstraintMode,
    Convention,
    DeliverPlan,
    Descriptor,
    DescriptorKind,
    FetchPlan,
    KeyInfo,
    ParseError,
    PlanStep,
    PotSelector,
    RefinedWorkItem,
    RoughWorkItem,
    SelectorKind,
    SourceConstraint,
    WorkKind,
    render_descriptor,
)
from .kitchen import (
    GridPos,
    Ingredient,
    Layout,
    LayoutFacts,
    PlayerId,
    layout_facts,
    manhattan,
)


class AmbiguousDescriptor(ValueError):
    """A positional descriptor does not pick out a unique tile."""


class UnknownPot(ValueError):
    def __init__(self, coord: GridPos):
        super().__init__(f"no pot at {tuple(coord)}")
        self.coord = coord


class NoCandidate(ValueError):
    """Constraint filtering left no usable source."""


class CyclicOrInfeasible(ValueError):
    """A Deliver has no Fetch to wait on and the pot is not externally filled."""


def _facts_of(layout) -> LayoutFacts:
    if isinstance(layout, LayoutFacts):
        return layout
    if isinstance(layout, Layout):
        return layout_facts(layout)
    raise TypeError(f"expected Layout or LayoutFacts, got {type(layout).__name__}")


def _pots_of(layout) -> tuple[GridPos, ...]:
    if isinstance(layout, (Layout, LayoutFacts)):
        return tuple(_facts_of(layout).pots)
    return tuple(GridPos(*p) for p in layout)


# ---------------------------------------------------------------------------
# Pot resolution
# ---------------------------------------------------------------------------


def _unique_extreme(positions: Sequence[GridPos], key, reverse: bool,
                    what: str) -> GridPos:
    best = max(positions, key=key) if reverse else min(positions, key=key)
    if sum(1 for p in positions if key(p) == key(best)) > 1:
        raise AmbiguousDescriptor(f"{what} does not single out one of {len(positions)} tiles")
    return best


def resolve_descriptor(desc: Descriptor, pots: Sequence[GridPos]) -> GridPos:
    if desc.kind is DescriptorKind.AT:
        if desc.coord not in pots:
            raise UnknownPot(desc.coord)
        return desc.coord
    if desc.kind is DescriptorKind.LEFT:
        return _unique_extreme(pots, lambda p: p.col, False, "left")
    if desc.kind is DescriptorKind.RIGHT:
        return _unique_extreme(pots, lambda p: p.col, True, "right")
    if desc.kind is DescriptorKind.ABOVE:
        return _unique_extreme(pots, lambda p: p.row, False, "above")
    if desc.kind is DescriptorKind.BELOW:
        return _unique_extreme(pots, lambda p: p.row, True, "below")
    # middle: only defined for an odd count with a unique central column
    cols = sorted(p.col for p in pots)
    if len(pots) % 2 == 0:
        raise AmbiguousDescriptor("middle of an even number of pots")
    mid = cols[len(cols) // 2]
    matches = [p for p in pots if p.col == mid]
    if len(matches) != 1:
        raise AmbiguousDescriptor("multiple pots share the middle column")
    return matches[0]


def resolve_pots(selector: PotSelector, layout) -> list[GridPos]:
    """Concrete pot coordinates for a selector, in stable order."""
    pots = _pots_of(layout)
    if selector.kind is SelectorKind.ALL:
        return list(pots)
    if selector.kind is SelectorKind.NOT_MENTIONED:
        return []
    out: list[GridPos] = []
    for desc in selector.named:
        pos = resolve_descriptor(desc, pots)
        if pos not in out:
            out.append(pos)
    return out


def descriptor_for_pot(pot: GridPos, pots: Sequence[GridPos]) -> Descriptor:
    """A phrase for this pot that resolve_descriptor maps back to it."""
    n = len(pots)
    cols = [p.col for p in pots]
    rows = [p.row for p in pots]
    if len(set(cols)) == n and n > 1:
        rank = sorted(cols).index(pot.col)
        if rank == 0:
            return Descriptor(DescriptorKind.LEFT)
        if rank == n - 1:
            return Descriptor(DescriptorKind.RIGHT)
        if n % 2 == 1 and rank == n // 2:
            return Descriptor(DescriptorKind.MIDDLE)
    elif len(set(rows)) == n and n > 1:
        rank = sorted(rows).index(pot.row)
        if rank == 0:
            return Descriptor(DescriptorKind.ABOVE)
        if rank == n - 1:
            return Descriptor(DescriptorKind.BELOW)
    return Descriptor.at(pot)


def selector_for(indices: frozenset[int] | None, pots: Sequence[GridPos]) -> PotSelector:
    """Selector naming the given pot indices (None means not mentioned)."""
    if indices is None:
        return PotSelector(SelectorKind.NOT_MENTIONED)
    if set(indices) == set(range(len(pots))):
        return PotSelector(SelectorKind.ALL)
    named = tuple(descriptor_for_pot(pots[i], pots) for i in sorted(indices))
    return PotSelector(SelectorKind.NAMED, named)


# ---------------------------------------------------------------------------
# Work assignment
# ---------------------------------------------------------------------------


def complement_assignment(
    ai_items: Sequence[RoughWorkItem],
    all_pots: Sequence[GridPos],
    objective: Ingredient,
) -> tuple[RoughWorkItem, ...]:
    """Everything in {Fetch, Deliver} x pots the AI did not claim."""
    claimed = {item.unit for item in ai_items}
    out = []
    for kind in (WorkKind.FETCH, WorkKind.DELIVER):
        for pot in all_pots:
            if (kind, pot) not in claimed:
                out.append(RoughWorkItem(agent=PlayerId.HUMAN, kind=kind, pot=pot))
    return tuple(out)


def rough_items_for(info: KeyInfo, facts: LayoutFacts) -> tuple[
        tuple[RoughWorkItem, ...], tuple[RoughWorkItem, ...]]:
    """AI items from the key info selectors plus the human complement."""
    fetch_pots = resolve_pots(info.ai_fetch, facts)
    deliver_pots = resolve_pots(info.ai_deliver, facts)
    ai = tuple(
        [RoughWorkItem(PlayerId.AI, WorkKind.FETCH, p) for p in fetch_pots]
        + [RoughWorkItem(PlayerId.AI, WorkKind.DELIVER, p) for p in deliver_pots])
    human = complement_assignment(ai, facts.pots, info.objective)
    return ai, human


# ---------------------------------------------------------------------------
# Refinement
# ---------------------------------------------------------------------------


def resolve_source(desc: Descriptor, candidates: Sequence[GridPos]) -> GridPos:
    """Descriptor resolution over ingredient/dish tiles instead of pots."""
    if desc.kind is DescriptorKind.AT:
        if desc.coord not in candidates:
            raise NoCandidate(f"no source at {tuple(desc.coord)}")
        return desc.coord
    if desc.kind is DescriptorKind.LEFT:
        return _unique_extreme(candidates, lambda p: p.col, False, "left")
    if desc.kind is DescriptorKind.RIGHT:
        return _unique_extreme(candidates, lambda p: p.col, True, "right")
    if desc.kind is DescriptorKind.ABOVE:
        return _unique_extreme(candidates, lambda p: p.row, False, "above")
    if desc.kind is DescriptorKind.BELOW:
        return _unique_extreme(candidates, lambda p: p.row, True, "below")
    raise AmbiguousDescriptor("middle is not defined for sources")


def apply_constraints(
    candidates: Sequence[GridPos],
    ingredient: Ingredient,
    constraints: Iterable[SourceConstraint],
) -> list[GridPos]:
    out = list(candidates)
    for c in constraints:
        if c.item is not ingredient:
            continue
        chosen = resolve_source(c.where, candidates)
        if c.mode is ConstraintMode.ONLY_FROM:
            out = [p for p in out if p == chosen]
        else:
            out = [p for p in out if p != chosen]
    return out


def refine(
    item: RoughWorkItem,
    facts: LayoutFacts,
    constraints: Sequence[SourceConstraint] = (),
    objective: Ingredient = Ingredient.ONION,
) -> RefinedWorkItem:
    """Pick concrete tiles: nearest to the pot, first listed wins ties."""
    def nearest(cands: Sequence[GridPos], what: str) -> GridPos:
        if not cands:
            raise NoCandidate(f"no {what} available")
        return min(cands, key=lambda p: manhattan(p, item.pot))

    if item.kind is WorkKind.FETCH:
        cands = apply_constraints(facts.sources(objective), objective, constraints)
        return FetchPlan(ingredient=objective, source=nearest(cands, "ingredient source"),
                         pot=item.pot)
    dish = nearest(facts.dishes, "dish source")
    port = nearest(facts.ports, "serving port")
    return DeliverPlan(dish_source=dish, pot=item.pot, port=port)


def estimate_time(item: RefinedWorkItem) -> int:
    """Fetch: six round trips; Deliver: the plate-pot-port-plate circuit."""
    if isinstance(item, FetchPlan):
        return 6 * manhattan(item.source, item.pot)
    return (manhattan(item.dish_source, item.pot)
            + manhattan(item.pot, item.port)
            + manhattan(item.port, item.dish_source))


# ---------------------------------------------------------------------------
# Scheduling
# ---------------------------------------------------------------------------


def schedule(
    items: Sequence[RoughWorkItem | tuple[RoughWorkItem, int]],
    cook_wait: int = 20,
    externally_filled: frozenset[GridPos] = frozenset(),
) -> list[RoughWorkItem]:
    """Greedy reorder: run ready work first, idle only when forced.

    A Fetch is always ready. A Deliver becomes ready cook_wait steps after
    its pot's last Fetch in the list finishes (or cook_wait steps into the
    episode when the pot is filled by someone outside this list).
    """
    norm: list[tuple[RoughWorkItem, int]] = []
    for entry in items:
        if isinstance(entry, RoughWorkItem):
            if entry.est_steps is None:
                raise ValueError(f"item without time estimate: {entry}")
            norm.append((entry, entry.est_steps))
        else:
            norm.append((entry[0], entry[1]))

    fetches_left = Counter(it.pot for it, _ in norm if it.kind is WorkKind.FETCH)
    fetch_finish: dict[GridPos, int] = {}
    pending = list(range(len(norm)))
    clock = 0
    out: list[RoughWorkItem] = []

    def readiness(i: int) -> int | None:
        item, _ = norm[i]
        if item.kind is WorkKind.FETCH:
            return 0
        if fetches_left[item.pot] > 0:
            return None  # must wait for a fetch still in the queue
        if item.pot in fetch_finish:
            return fetch_finish[item.pot] + cook_wait
        if item.pot in externally_filled:
            return cook_wait
        raise CyclicOrInfeasible(
            f"deliver for pot {tuple(item.pot)} has no fetch and no external fill")

    while pending:
        chosen = None
        for i in pending:
            r = readiness(i)
            if r is not None and r <= clock:
                chosen = i
                break
        if chosen is None:
            ready_times = [r for i in pending if (r := readiness(i)) is not None]
            clock = min(ready_times)
            continue
        item, est = norm[chosen]
        pending.remove(chosen)
        clock += est
        if item.kind is WorkKind.FETCH:
            fetches_left[item.pot] -= 1
            if fetches_left[item.pot] == 0:
                fetch_finish[item.pot] = clock
        out.append(replace(item, est_steps=est))
    return out


# ---------------------------------------------------------------------------
# Preference specs and ground truth
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PreferenceSpec:
    """What the human wants the AI to cover; None means not mentioned."""

    objective: Ingredient
    placement_pots: frozenset[int] | None
    delivery_pots: frozenset[int] | None
    source_constraints: tuple[SourceConstraint, ...] = ()

    def __post_init__(self) -> None:
        if not self.placement_pots and not self.delivery_pots:
            raise ValueError("a preference must assign at least one job")
        for pots in (self.placement_pots, self.delivery_pots):
            if pots is not None and not pots:
                raise ValueError("use None for an unmentioned job, not an empty set")


@dataclass(frozen=True)
class GroundTruth:
    key_info: KeyInfo
    rough: dict[PlayerId, tuple[RoughWorkItem, ...]]
    refined: tuple[RefinedWorkItem, ...]
    times: tuple[int, ...]
    schedule: dict[PlayerId, tuple[RoughWorkItem, ...]]

    @property
    def rough_in_order(self) -> tuple[RoughWorkItem, ...]:
        return self.rough[PlayerId.AI] + self.rough[PlayerId.HUMAN]


def key_info_for(spec: PreferenceSpec, layout) -> KeyInfo:
    pots = _pots_of(layout)
    return KeyInfo(
        objective=spec.objective,
        ai_fetch=selector_for(spec.placement_pots, pots),
        ai_deliver=selector_for(spec.delivery_pots, pots),
        constraints=tuple(spec.source_constraints),
    )


def _constraint_descriptors(sources: Sequence[GridPos],
                            mode: ConstraintMode) -> list[Descriptor]:
    """Descriptors that resolve uniquely over these sources and leave a
    usable candidate after the constraint is applied."""
    if mode is ConstraintMode.FORBIDDEN and len(sources) < 2:
        return []
    options = [Descriptor(k) for k in (DescriptorKind.LEFT, DescriptorKind.RIGHT,
                                       DescriptorKind.ABOVE, DescriptorKind.BELOW)]
    options += [Descriptor(DescriptorKind.AT, p) for p in sources]
    usable = []
    for desc in options:
        try:
            resolve_source(desc, sources)
        except (AmbiguousDescriptor, NoCandidate):
            continue
        usable.append(desc)
    return usable


def random_spec(rng: random.Random, layout) -> PreferenceSpec:
    """Draw a preference this scene can express and satisfy.

    Used to seed benchmark sweeps; every draw survives the full instruction
    round trip and refinement because pot subsets and source constraints are
    restricted to what the layout's tiles can name.
    """
    facts = _facts_of(layout)
    n = len(facts.pots)
    present = sorted(facts.ingredients_present, key=lambda i: i.value)
    objective = rng.choice(present)

    def draw_subset() -> frozenset[int] | None:
        roll = rng.random()
        if roll < 0.3:
            return None
        if roll < 0.55 or n == 1:
            return frozenset(range(n))
        return frozenset(rng.sample(range(n), rng.randint(1, n)))

    placement = draw_subset()
    delivery = draw_subset()
    if placement is None and delivery is None:
        placement = frozenset(range(n))

    constraints: tuple[SourceConstraint, ...] = ()
    sources = facts.sources(objective)
    if sources and rng.random() < 0.4:
        mode = rng.choice((ConstraintMode.ONLY_FROM, ConstraintMode.FORBIDDEN))
        usable = _constraint_descriptors(sources, mode)
        if usable:
            constraints = (SourceConstraint(objective, mode, rng.choice(usable)),)
    return PreferenceSpec(objective, placement, delivery, constraints)


def external_fills(agent_items: Sequence[RoughWorkItem]) -> frozenset[GridPos]:
    """Pots this agent delivers for but someone else fills."""
    fetched = {it.pot for it in agent_items if it.kind is WorkKind.FETCH}
    delivered = {it.pot for it in agent_items if it.kind is WorkKind.DELIVER}
    return frozenset(delivered - fetched)


def ground_truth(spec: PreferenceSpec, layout) -> GroundTruth:
    """Run the whole deterministic planning chain for a preference."""
    facts = _facts_of(layout)
    info = key_info_for(spec, facts)
    ai, human = rough_items_for(info, facts)
    ordered = ai + human
    refined = tuple(refine(it, facts, info.constraints, info.objective) for it in ordered)
    times = tuple(estimate_time(r) for r in refined)
    est = {it.unit + (it.agent,): t for it, t in zip(ordered, times)}
    schedules: dict[PlayerId, tuple[RoughWorkItem, ...]] = {}
    for agent, items in ((PlayerId.AI, ai), (PlayerId.HUMAN, human)):
        timed = [(it, est[it.unit + (it.agent,)]) for it in items]
        schedules[agent] = tuple(schedule(timed, externally_filled=external_fills(items)))
    return GroundTruth(key_info=info, rough={PlayerId.AI: ai, PlayerId.HUMAN: human},
                       refined=refined, times=times, schedule=schedules)


def truth_convention(truth: GroundTruth, transcript_ids: tuple[int, ...] = ()) -> Convention:
    """The Convention a perfect pipeline run would assemble."""
    refined_by = {}
    time_by = {}
    for item, ref, t in zip(truth.rough_in_order, truth.refined, truth.times):
        key = (item.agent,) + item.unit
        refined_by[key] = ref
        time_by[key] = t
    plans = {}
    for agent in (PlayerId.AI, PlayerId.HUMAN):
        steps = []
        for item in truth.schedule[agent]:
            key = (agent,) + item.unit
            steps.append(PlanStep(rough=item, refined=refined_by[key],
                                  est_steps=time_by[key]))
        plans[agent] = tuple(steps)
    return Convention(objective=truth.key_info.objective, ai_plan=plans[PlayerId.AI],
                      human_plan=plans[PlayerId.HUMAN], transcript_ids=transcript_ids)


# ---------------------------------------------------------------------------
# Instruction grammar
# ---------------------------------------------------------------------------


_WHERE_PHRASES = {
    DescriptorKind.LEFT: "on the left",
    DescriptorKind.RIGHT: "on the right",
    DescriptorKind.ABOVE: "above",
    DescriptorKind.BELOW: "below",
}


def where_phrase(desc: Descriptor) -> str:
    if desc.kind is DescriptorKind.AT:
        return f"at ({desc.coord.row},{desc.coord.col})"
    return _WHERE_PHRASES[desc.kind]


def render_constraint(c: SourceConstraint) -> str:
    where = where_phrase(c.where)
    ing = c.item.value
    if c.mode is ConstraintMode.ONLY_FROM:
        return f"Please take the {c.item.plural} from the {ing} spot {where}."
    return f"Do not take {c.item.plural} from the {ing} dots {where}."


_CONSTRAINT_RX = re.compile(
    r"(?P<neg>(?:do\s+not|don't|never|cannot|can\s*not)\s+)?(?:only\s+)?take\s+"
    r"(?:the\s+)?(?P<ing>onion|tomato)(?:e?s)?\s+from\s+the\s+(?:onion|tomato)\s+"
    r"(?:spot|dot)s?\s+(?P<where>(?:\([^)]*\)|[^.!?\n,])+)", re.I)


def _parse_where(text: str) -> Descriptor:
    low = text.strip().lower()
    m = re.search(r"\(\s*(\d+)\s*,\s*(\d+)\s*\)", low)
    if m:
        return Descriptor.at(GridPos(int(m.group(1)), int(m.group(2))))
    if "left" in low:
        return Descriptor(DescriptorKind.LEFT)
    if "right" in low:
        return Descriptor(DescriptorKind.RIGHT)
    if "above" in low or "top" in low or "upper" in low:
        return Descriptor(DescriptorKind.ABOVE)
    if "below" in low or "bottom" in low or "lower" in low:
        return Descriptor(DescriptorKind.BELOW)
    raise ParseError(f"unrecognized place phrase {text!r}", "where")


def parse_constraints(text: str) -> tuple[SourceConstraint, ...]:
    """Source restrictions mentioned anywhere in instruction or feedback."""
    out = []
    for m in _CONSTRAINT_RX.finditer(text):
        mode = ConstraintMode.FORBIDDEN if m.group("neg") else ConstraintMode.ONLY_FROM
        try:
            where = _parse_where(m.group("where"))
        except ParseError:
            continue
        out.append(SourceConstraint(item=Ingredient(m.group("ing").lower()),
                                    mode=mode, where=where))
    return tuple(out)


_TEMPLATES_BOTH_ALL = (
    "Please join me in making {x} soup.",
    "Please make {x} soup.",
)
_TEMPLATES_NO_DELIVERY = (
    "Please join me in making {x} soup. You are only responsible for putting the {x} "
    "into the pot.",
    "Please make {x} soup, and you are only responsible for preparing {x}s.",
)


def _pot_phrase(selector: PotSelector) -> str:
    return " and ".join(render_descriptor(d) for d in selector.named)


def gen_instruction(spec: PreferenceSpec, layout, seed: int = 0) -> str:
    """Render a preference as a natural-language instruction, seeded."""
    rng = random.Random(seed)
    pots = _pots_of(layout)
    x = spec.objective.value
    fetch = selector_for(spec.placement_pots, pots)
    deliver = selector_for(spec.delivery_pots, pots)
    fk, dk = fetch.kind, deliver.kind
    A, NM, NA = SelectorKind.ALL, SelectorKind.NOT_MENTIONED, SelectorKind.NAMED

    if (fk, dk) == (A, A):
        text = rng.choice(_TEMPLATES_BOTH_ALL).format(x=x)
    elif (fk, dk) == (A, NM):
        text = rng.choice(_TEMPLATES_NO_DELIVERY).format(x=x)
    elif (fk, dk) == (NM, A):
        text = (f"Please join me in making {x} soup. "
                "You are only responsible for the delivery of food.")
    elif fk is NA and dk is NA and fetch.named == deliver.named:
        text = f"Please use {_pot_phrase(fetch)} to make {x} soup."
    elif (fk, dk) == (NA, NM):
        text = (f"Please use {_pot_phrase(fetch)} to make {x} soup. "
                f"You are only responsible for putting the {x} into the pot.")
    elif (fk, dk) == (NM, NA):
        text = (f"Please make {x} soup. "
                f"You are only responsible for the delivery of {_pot_phrase(deliver)}.")
    elif (fk, dk) == (A, NA):
        text = (f"Please make {x} soup and be responsible for the delivery of "
                f"{_pot_phrase(deliver)}.")
    elif (fk, dk) == (NA, A):
        text = (f"Please join me in making {x} soup. "
                f"You only need to fetch {x}s for {_pot_phrase(fetch)}.")
    else:
        text = (f"Please make {x} soup. You only need to fetch {x}s for "
                f"{_pot_phrase(fetch)} and deliver the soup for {_pot_phrase(deliver)}.")

    for c in spec.source_constraints:
        text += " " + render_constraint(c)
    return text


def _selector_fragment(fragment: str) -> PotSelector:
    from .convention import parse_selector

    return parse_selector(fragment.strip().rstrip(".,"))


def interpret_instruction(text: str, layout=None) -> KeyInfo:
    """Recover a KeyInfo from instruction text written in the template grammar.

    Sentences are scanned in order; later job clauses override earlier ones
    field by field, matching how a clarification amends a request.
    """
    obj_m = re.search(r"(onion|tomato)\s+soup", text, re.I)
    if not obj_m:
        raise ParseError("no soup objective in instruction", "objective")
    objective = Ingredient(obj_m.group(1).lower())

    fetch: PotSelector | None = None
    deliver: PotSelector | None = None
    deliver_explicit = False

    sentences = re.split(r"(?<=[.!?])\s+|\n+", text)
    for sentence in sentences:
        low = sentence.lower()

        m = re.search(r"use\s+(.+?)\s+to\s+make", low)
        if m:
            try:
                sel = _selector_fragment(m.group(1))
                fetch = sel
                deliver = sel
                deliver_explicit = True
            except ParseError:
                pass

        if re.search(r"only\s+(?:responsible\s+for|in\s+charge\s+of)\s+"
                     r"(?:preparing|putting|placing)", low):
            deliver = PotSelector(SelectorKind.NOT_MENTIONED)
            deliver_explicit = True

        m = re.search(r"only\s+responsible\s+for\s+the\s+delivery\s+of\s+([^.!?]+)", low)
        if m:
            rest = m.group(1).strip()
            if re.match(r"(the\s+)?(food|soup)s?\b", rest):
                fetch = PotSelector(SelectorKind.NOT_MENTIONED)
                if deliver is None:
                    deliver = PotSelector(SelectorKind.ALL)
                deliver_explicit = True
            else:
                try:
                    deliver = _selector_fragment(rest)
                    fetch = PotSelector(SelectorKind.NOT_MENTIONED)
                    deliver_explicit = True
                except ParseError:
                    pass
        elif re.search(r"be\s+responsible\s+for\s+the\s+delivery\s+of\s+", low):
            m = re.search(r"be\s+responsible\s+for\s+the\s+delivery\s+of\s+([^.!?]+)", low)
            try:
                sel = _selector_fragment(m.group(1))
                if (deliver_explicit and deliver is not None
                        and deliver.kind is SelectorKind.NAMED):
                    deliver = PotSelector(SelectorKind.NAMED, deliver.named + sel.named)
                else:
                    deliver = sel
                    deliver_explicit = True
            except ParseError:
                pass

        m = re.search(r"only\s+need\s+to\s+fetch\s+\w+\s+for\s+(.+)", low)
        if m:
            rest = m.group(1)
            rest = re.split(r"\s+and\s+deliver\b", rest)[0]
            try:
                fetch = _selector_fragment(rest)
            except ParseError:
                pass

        m = re.search(r"deliver\s+the\s+soups?\s+(?:for|of)\s+([^.!?]+)", low)
        if m:
            try:
                deliver = _selector_fragment(m.group(1))
                deliver_explicit = True
            except ParseError:
                pass

    if fetch is None:
        fetch = PotSelector(SelectorKind.ALL)
    if deliver is None:
        deliver = PotSelector(SelectorKind.ALL)
    return KeyInfo(objective=objective, ai_fetch=fetch, ai_deliver=deliver,
                   constraints=parse_constraints(text))


def spec_from_key_info(info: KeyInfo, layout) -> PreferenceSpec:
    """Recover the preference a key-info block encodes, by pot index."""
    pots = _pots_of(layout)
    index = {p: i for i, p in enumerate(pots)}

    def indices(selector: PotSelector) -> frozenset[int] | None:
        if selector.kind is SelectorKind.NOT_MENTIONED:
            return None
        return frozenset(index[p] for p in resolve_pots(selector, layout))

    return PreferenceSpec(info.objective, indices(info.ai_fetch),
                          indices(info.ai_deliver), info.constraints)


# ---------------------------------------------------------------------------
# Grading
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GradeReport:
    stages: dict[str, bool]
    final: bool

    @property
    def all_true(self) -> bool:
        return self.final and all(self.stages.values())


def _selectors_match(a: KeyInfo, b: KeyInfo) -> bool:
    return (a.objective is b.objective and a.ai_fetch == b.ai_fetch
            and a.ai_deliver == b.ai_deliver)


def grade(transcripts, truth: GroundTruth) -> GradeReport:
    """Compare each stage's parsed output with the ground truth.

    Works on the transcripts alone: responses are re-parsed with the same
    parsers the pipeline uses, and the final solution is re-assembled from
    the parsed stages, so a corrupted stage surfaces both in its own flag
    and in the final-solution flag.
    """
    from .convention import (parse_key_info, parse_refined, parse_rough_plan,
                             parse_schedule, parse_time)

    by_stage: dict[str, list] = {}
    for t in transcripts:
        by_stage.setdefault(t.stage, []).append(t)

    def last_per_item(ts: list) -> list:
        """Collapse retries: keep the last transcript for each work item."""
        if not ts or any(getattr(t, "item_index", None) is None for t in ts):
            return ts
        by_item = {t.item_index: t for t in ts}
        return [by_item[i] for i in sorted(by_item)]

    stages: dict[str, bool] = {}
    parsed_rough = None
    parsed_refined: list[RefinedWorkItem | None] = []
    parsed_times: list[int | None] = []
    parsed_schedules: dict[PlayerId, tuple[RoughWorkItem, ...] | None] = {}

    def attempt(fn, *args):
        try:
            return fn(*args)
        except ParseError:
            return None

    ki = None
    if by_stage.get("key_info"):
        ki = attempt(parse_key_info, by_stage["key_info"][-1].response)
    stages["key_info"] = ki is not None and _selectors_match(ki, truth.key_info)

    if by_stage.get("rough"):
        parsed_rough = attempt(parse_rough_plan, by_stage["rough"][-1].response)
    expected_rough = truth.rough
    stages["rough"] = (parsed_rough is not None
                       and parsed_rough.ai == expected_rough[PlayerId.AI]
                       and parsed_rough.human == expected_rough[PlayerId.HUMAN])

    refine_stage = "refine" if "refine" in by_stage else (
        "refine_time" if "refine_time" in by_stage else None)
    merged = refine_stage == "refine_time"
    if refine_stage:
        for t in last_per_item(by_stage[refine_stage]):
            parsed_refined.append(attempt(parse_refined, t.response))
            if merged:
                parsed_times.append(attempt(parse_time, t.response))
    ok_refined = (len(parsed_refined) == len(truth.refined)
                  and all(p == e for p, e in zip(parsed_refined, truth.refined)))
    if merged:
        ok_times = (len(parsed_times) == len(truth.times)
                    and all(p == e for p, e in zip(parsed_times, truth.times)))
        stages["refine_time"] = ok_refined and ok_times
    else:
        stages["refine"] = ok_refined
        if by_stage.get("time"):
            for t in last_per_item(by_stage["time"]):
                parsed_times.append(attempt(parse_time, t.response))
        stages["time"] = (len(parsed_times) == len(truth.times)
                          and all(p == e for p, e in zip(parsed_times, truth.times)))

    expected_agents = [a for a in (PlayerId.AI, PlayerId.HUMAN) if truth.schedule[a]]
    sched_transcripts = by_stage.get("schedule", [])
    if sched_transcripts and all(getattr(t, "agent", None) is not None
                                 for t in sched_transcripts):
        by_agent = {t.agent: t for t in sched_transcripts}
        pairs = [(by_agent[a], a) for a in expected_agents if a in by_agent]
        ok_sched = len(pairs) == len(expected_agents)
    else:
        pairs = list(zip(sched_transcripts, expected_agents))
        ok_sched = len(sched_transcripts) == len(expected_agents)
    for t, agent in pairs:
        parsed = attempt(parse_schedule, t.response, agent)
        parsed_schedules[agent] = parsed
        ok_sched = ok_sched and parsed == truth.schedule[agent]
    stages["schedule"] = ok_sched

    final = False
    if (stages["key_info"] and parsed_rough is not None and ok_refined
            and None not in parsed_times and ok_sched):
        ordered = parsed_rough.ai + parsed_rough.human
        if len(ordered) == len(parsed_refined):
            refined_by = {}
            time_by = {}
            for item, ref, tm in zip(ordered, parsed_refined, parsed_times):
                key = (item.agent,) + item.unit
                refined_by[key] = ref
                time_by[key] = tm
            try:
                plans = {}
                for agent in (PlayerId.AI, PlayerId.HUMAN):
                    sched = parsed_schedules.get(agent)
                    if sched is None and agent in expected_agents:
                        raise KeyError(agent)
                    steps = []
                    for item in sched or ():
                        key = (agent,) + item.unit
                        steps.append(PlanStep(rough=item, refined=refined_by[key],
                                              est_steps=time_by[key]))
                    plans[agent] = tuple(steps)
                built = Convention(objective=ki.objective, ai_plan=plans[PlayerId.AI],
                                   human_plan=plans[PlayerId.HUMAN])
                final = built.same_assignment(truth_convention(truth))
            except KeyError:
                final = False
    return GradeReport(stages=stages, final=final)
