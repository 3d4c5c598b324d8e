"""Shared plan vocabulary: key info, work items, and the convention format.

Renderers produce the exact sentence templates the planning sessions answer
with; parsers accept those templates plus the small phrasing variations that
show up in real model output (numbering, "Pick up" for "Fetch", spaced
coordinates, curly apostrophes).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .kitchen import GridPos, Ingredient, LayoutFacts, PlayerId


class ParseError(ValueError):
    """Session answer text did not contain the expected structure."""

    def __init__(self, message: str, field_name: str = ""):
        super().__init__(message)
        self.field = field_name


class InfeasiblePlan(ValueError):
    """A convention references tiles the layout does not provide."""


class WorkKind(Enum):
    FETCH = "fetch"
    DELIVER = "deliver"


class DescriptorKind(Enum):
    LEFT = "left"
    MIDDLE = "middle"
    RIGHT = "right"
    ABOVE = "above"
    BELOW = "below"
    AT = "at"


@dataclass(frozen=True)
class Descriptor:
    kind: DescriptorKind
    coord: GridPos | None = None

    @staticmethod
    def at(pos: GridPos) -> "Descriptor":
        return Descriptor(DescriptorKind.AT, pos)


class SelectorKind(Enum):
    ALL = "all"
    NOT_MENTIONED = "not_mentioned"
    NAMED = "named"


@dataclass(frozen=True)
class PotSelector:
    kind: SelectorKind
    named: tuple[Descriptor, ...] = ()

    @staticmethod
    def of(*descriptors: Descriptor) -> "PotSelector":
        return PotSelector(SelectorKind.NAMED, tuple(descriptors))


PotSelector.ALL = PotSelector(SelectorKind.ALL)
PotSelector.NOT_MENTIONED = PotSelector(SelectorKind.NOT_MENTIONED)


class ConstraintMode(Enum):
    ONLY_FROM = "only_from"
    FORBIDDEN = "forbidden"


@dataclass(frozen=True)
class SourceConstraint:
    item: Ingredient
    mode: ConstraintMode
    where: Descriptor


@dataclass(frozen=True)
class KeyInfo:
    objective: Ingredient
    ai_fetch: PotSelector
    ai_deliver: PotSelector
    constraints: tuple[SourceConstraint, ...] = ()


@dataclass(frozen=True)
class RoughWorkItem:
    agent: PlayerId
    kind: WorkKind
    pot: GridPos
    est_steps: int | None = None

    @property
    def unit(self) -> tuple[WorkKind, GridPos]:
        return (self.kind, self.pot)


@dataclass(frozen=True)
class FetchPlan:
    ingredient: Ingredient
    source: GridPos
    pot: GridPos


@dataclass(frozen=True)
class DeliverPlan:
    dish_source: GridPos
    pot: GridPos
    port: GridPos


RefinedWorkItem = FetchPlan | DeliverPlan


@dataclass(frozen=True)
class PlanStep:
    """One scheduled work unit; est_steps is None when the text omitted it."""

    rough: RoughWorkItem
    refined: RefinedWorkItem
    est_steps: int | None


@dataclass(frozen=True)
class Convention:
    """The agreed division of labor both agents execute."""

    objective: Ingredient
    ai_plan: tuple[PlanStep, ...]
    human_plan: tuple[PlanStep, ...]
    transcript_ids: tuple[int, ...] = ()

    def plan_for(self, agent: PlayerId) -> tuple[PlanStep, ...]:
        return self.ai_plan if agent is PlayerId.AI else self.human_plan

    def same_assignment(self, other: "Convention") -> bool:
        """Structural equality ignoring transcript bookkeeping."""
        def strip(plan):
            return tuple((s.rough.kind, s.rough.pot, s.refined, s.est_steps) for s in plan)

        return (self.objective is other.objective
                and strip(self.ai_plan) == strip(other.ai_plan)
                and strip(self.human_plan) == strip(other.human_plan))

    def same_work(self, other: "Convention") -> bool:
        """Like same_assignment but blind to step estimates."""
        def strip(plan):
            return tuple((s.rough.kind, s.rough.pot, s.refined) for s in plan)

        return (self.objective is other.objective
                and strip(self.ai_plan) == strip(other.ai_plan)
                and strip(self.human_plan) == strip(other.human_plan))


def validate_convention(convention: Convention, facts: LayoutFacts) -> None:
    """Raise InfeasiblePlan when a plan references tiles the layout lacks."""
    sources = set(facts.sources(convention.objective))
    for step in convention.ai_plan + convention.human_plan:
        if step.est_steps is None or step.est_steps <= 0:
            raise InfeasiblePlan(f"missing or non-positive time estimate on {step.rough}")
        if step.rough.pot not in facts.pots:
            raise InfeasiblePlan(f"unknown pot {tuple(step.rough.pot)}")
        refined = step.refined
        if isinstance(refined, FetchPlan):
            if step.rough.kind is not WorkKind.FETCH or refined.pot != step.rough.pot:
                raise InfeasiblePlan("refined fetch does not match its rough item")
            if refined.source not in sources:
                raise InfeasiblePlan(f"unknown source {tuple(refined.source)}")
        else:
            if step.rough.kind is not WorkKind.DELIVER or refined.pot != step.rough.pot:
                raise InfeasiblePlan("refined delivery does not match its rough item")
            if refined.dish_source not in facts.dishes:
                raise InfeasiblePlan(f"unknown dish source {tuple(refined.dish_source)}")
            if refined.port not in facts.ports:
                raise InfeasiblePlan(f"unknown serving port {tuple(refined.port)}")


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def render_pos(pos: GridPos, spaced: bool = False) -> str:
    sep = ", " if spaced else ","
    return f"({pos.row}{sep}{pos.col})"


_DESCRIPTOR_PHRASES = {
    DescriptorKind.LEFT: "the pot on the left",
    DescriptorKind.MIDDLE: "the middle pot",
    DescriptorKind.RIGHT: "the pot on the right",
    DescriptorKind.ABOVE: "the pot above",
    DescriptorKind.BELOW: "the pot below",
}


def render_descriptor(desc: Descriptor) -> str:
    if desc.kind is DescriptorKind.AT:
        return f"the pot at {render_pos(desc.coord)}"
    return _DESCRIPTOR_PHRASES[desc.kind]


def render_selector(selector: PotSelector) -> str:
    if selector.kind is SelectorKind.ALL:
        return "All pots"
    if selector.kind is SelectorKind.NOT_MENTIONED:
        return "Not mentioned"
    return " + ".join(render_descriptor(d) for d in selector.named)


def render_key_info(info: KeyInfo, numbered: bool = False) -> str:
    pre1, pre2 = ("(1) ", "(2) ") if numbered else ("", "")
    return "\n".join([
        f"Cooking objectives: {info.objective.value} soup",
        "AI's jobs:",
        f"{pre1}Fetching vegetables: {render_selector(info.ai_fetch)}.",
        f"{pre2}Delivering food: {render_selector(info.ai_deliver)}.",
    ])


def render_rough_item(item: RoughWorkItem, objective: Ingredient,
                      with_steps: bool = False) -> str:
    if item.kind is WorkKind.FETCH:
        text = f"Fetch {objective.plural} for pot at {render_pos(item.pot)}"
    else:
        text = f"Deliver {objective.value} soup for pot {render_pos(item.pot)}"
    if with_steps and item.est_steps is not None:
        text += f", {item.est_steps} steps"
    return text


def render_refined(item: RefinedWorkItem) -> str:
    if isinstance(item, FetchPlan):
        return (f"Take the {item.ingredient.value} from position {render_pos(item.source)} "
                f"and place it in the pot {render_pos(item.pot)}.")
    return (f"Take the plate from {render_pos(item.dish_source, spaced=True)}, "
            f"then take the food from the pot {render_pos(item.pot, spaced=True)}, "
            f"and finally deliver it to the delivery port {render_pos(item.port, spaced=True)}.")


def render_convention(convention: Convention) -> str:
    """The final work agreement, one numbered line per plan step."""
    blocks = []
    for title, plan in (("AI", convention.ai_plan), ("Human", convention.human_plan)):
        lines = [f"The work content and execution sequence of {title}:"]
        if not plan:
            lines.append("None")
        for i, step in enumerate(plan, start=1):
            rough = render_rough_item(
                RoughWorkItem(agent=PlayerId.AI, kind=step.rough.kind, pot=step.rough.pot,
                              est_steps=step.est_steps),
                convention.objective, with_steps=True)
            lines.append(f"({i}) {rough}: {render_refined(step.refined)}")
        blocks.append("\n".join(lines))
    return "\n".join(blocks)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


_COORD = r"\(\s*(\d+)\s*,\s*(\d+)\s*\)"
_OBJECTIVE_RX = re.compile(
    r"cooking\s+objectives?\s*[::]\s*(?:make\s+|making\s+)?(onion|tomato)", re.I)
_FETCH_LINE_RX = re.compile(
    r"(?:fetching|picking\s+up)\s+vegetables?\s*[::]\s*(.+)", re.I)
_DELIVER_LINE_RX = re.compile(r"delivering\s+(?:food|soup)s?\s*[::]\s*(.+)", re.I)
_ROUGH_FETCH_RX = re.compile(
    r"(?:fetch|pick\s+up)\s+(onion|tomato)(?:e?s)?\s+for\s+(?:the\s+)?pot\s*(?:at\s+|to\s+)?"
    + _COORD, re.I)
_ROUGH_DELIVER_RX = re.compile(
    r"deliver\s+(onion|tomato)\s+soup\s+for\s+(?:the\s+)?pot\s*(?:at\s+|to\s+)?" + _COORD, re.I)
_STEPS_RX = re.compile(r",\s*(\d+)\s*steps", re.I)
_REFINED_FETCH_RX = re.compile(
    r"take\s+the\s+(onion|tomato)\s+from\s+(?:position\s+)?" + _COORD
    + r"\s+and\s+place\s+it\s+in(?:to)?\s+the\s+pot\s*(?:at\s*)?" + _COORD, re.I)
_REFINED_DELIVER_RX = re.compile(
    r"take\s+the\s+(?:plate|dish)\s+from\s+(?:position\s+)?" + _COORD
    + r"\s*,?\s*then\s+take\s+the\s+(?:food|soup)\s+from\s+the\s+pot\s*(?:at\s*)?" + _COORD
    + r"\s*,?\s*and\s+finally\s+deliver\s+it\s+to\s+the\s+(?:delivery|serving)?\s*port\s*"
    + _COORD, re.I)
_TIME_LINE_RX = re.compile(r"approximate\s+time(?:\s+required)?\s+is\s*[::]?([^\n]*)", re.I)
_TIME_STEPS_RX = re.compile(r"(\d+)\s*steps", re.I)
_SCHEDULE_MARK_RX = re.compile(
    r"(?:work\s+sequence|execution\s+(?:order|sequence)).{0,40}?(?:adjusted\s+to|is|are)\s*[::]",
    re.I | re.S)


def _pos(groups, i) -> GridPos:
    return GridPos(int(groups[i]), int(groups[i + 1]))


def parse_selector(text: str) -> PotSelector:
    body = text.strip().rstrip(".")
    low = body.lower()
    if re.search(r"\ball\b", low):
        return PotSelector.ALL
    if "not mentioned" in low or low in ("none", ""):
        return PotSelector.NOT_MENTIONED
    descriptors = []
    # shield coordinate commas from the list splitter
    protected = re.sub(_COORD, lambda m: f"({m.group(1)};{m.group(2)})", body)
    for chunk in re.split(r"\s*\+\s*|,\s*(?:and\s+)?|\s+and\s+", protected):
        chunk = chunk.strip()
        if not chunk:
            continue
        m = re.search(r"\(\s*(\d+)\s*;\s*(\d+)\s*\)", chunk)
        if m:
            descriptors.append(Descriptor.at(_pos(m.groups(), 0)))
            continue
        cl = chunk.lower()
        if "left" in cl:
            descriptors.append(Descriptor(DescriptorKind.LEFT))
        elif "middle" in cl or "center" in cl:
            descriptors.append(Descriptor(DescriptorKind.MIDDLE))
        elif "right" in cl:
            descriptors.append(Descriptor(DescriptorKind.RIGHT))
        elif "above" in cl or "top" in cl or "upper" in cl:
            descriptors.append(Descriptor(DescriptorKind.ABOVE))
        elif "below" in cl or "bottom" in cl or "lower" in cl:
            descriptors.append(Descriptor(DescriptorKind.BELOW))
        else:
            raise ParseError(f"unrecognized pot phrase {chunk!r}", "selector")
    if not descriptors:
        raise ParseError(f"no pot descriptors in {text!r}", "selector")
    return PotSelector(SelectorKind.NAMED, tuple(descriptors))


def parse_key_info(text: str) -> KeyInfo:
    """Extract objective and the AI's fetch/deliver pot selectors."""
    m = _OBJECTIVE_RX.search(text)
    if not m:
        raise ParseError("no cooking objective found", "objective")
    objective = Ingredient(m.group(1).lower())
    fm = _FETCH_LINE_RX.search(text)
    if not fm:
        raise ParseError("no fetching line found", "fetch")
    dm = _DELIVER_LINE_RX.search(text)
    if not dm:
        raise ParseError("no delivering line found", "deliver")
    return KeyInfo(
        objective=objective,
        ai_fetch=parse_selector(fm.group(1)),
        ai_deliver=parse_selector(dm.group(1)),
    )


@dataclass(frozen=True)
class ParsedRough:
    kind: WorkKind
    pot: GridPos
    ingredient: Ingredient
    est_steps: int | None = None


def parse_rough_item(text: str) -> ParsedRough:
    fm = _ROUGH_FETCH_RX.search(text)
    dm = _ROUGH_DELIVER_RX.search(text)
    if fm and (not dm or fm.start() < dm.start()):
        m, kind = fm, WorkKind.FETCH
    elif dm:
        m, kind = dm, WorkKind.DELIVER
    else:
        raise ParseError(f"no work item in {text!r}", "rough")
    steps = None
    sm = _STEPS_RX.search(text, m.end())
    if sm:
        steps = int(sm.group(1))
    return ParsedRough(kind=kind, pot=_pos(m.groups(), 1),
                       ingredient=Ingredient(m.group(1).lower()), est_steps=steps)


@dataclass(frozen=True)
class RoughPlanParse:
    ai: tuple[RoughWorkItem, ...]
    human: tuple[RoughWorkItem, ...]
    objective: Ingredient | None


_ROUGH_HEADING_RX = re.compile(r"rough\s+(?:work|task)", re.I)


def parse_rough_plan(text: str) -> RoughPlanParse:
    """Split a work-division answer into the AI and human item lists."""
    items: dict[PlayerId, list[RoughWorkItem]] = {PlayerId.AI: [], PlayerId.HUMAN: []}
    objective: Ingredient | None = None
    current: PlayerId | None = None
    for line in text.splitlines():
        if _ROUGH_HEADING_RX.search(line):
            if re.search(r"\bAI\b", line):
                current = PlayerId.AI
                continue
            if re.search(r"human", line, re.I):
                current = PlayerId.HUMAN
                continue
        if current is None:
            continue
        try:
            parsed = parse_rough_item(line)
        except ParseError:
            continue
        objective = objective or parsed.ingredient
        items[current].append(RoughWorkItem(agent=current, kind=parsed.kind,
                                            pot=parsed.pot, est_steps=parsed.est_steps))
    if current is None:
        raise ParseError("no rough work sections found", "rough_plan")
    return RoughPlanParse(ai=tuple(items[PlayerId.AI]), human=tuple(items[PlayerId.HUMAN]),
                          objective=objective)


def parse_refined(text: str) -> RefinedWorkItem:
    """The last refined work sentence in the text wins."""
    candidates: list[tuple[int, RefinedWorkItem]] = []
    for m in _REFINED_FETCH_RX.finditer(text):
        g = m.groups()
        candidates.append((m.start(), FetchPlan(
            ingredient=Ingredient(g[0].lower()), source=_pos(g, 1), pot=_pos(g, 3))))
    for m in _REFINED_DELIVER_RX.finditer(text):
        g = m.groups()
        candidates.append((m.start(), DeliverPlan(
            dish_source=_pos(g, 0), pot=_pos(g, 2), port=_pos(g, 4))))
    if not candidates:
        raise ParseError("no refined work sentence found", "refined")
    return max(candidates, key=lambda c: c[0])[1]


def parse_time(text: str) -> int:
    """Pull the step count out of a time-estimate answer."""
    line = _TIME_LINE_RX.search(text)
    if line:
        matches = _TIME_STEPS_RX.findall(line.group(1))
        if matches:
            return int(matches[-1])
        trailing = re.findall(r"=?\s*(\d+)\s*\.?\s*$", line.group(1).strip())
        if trailing:
            return int(trailing[-1])
    matches = _TIME_STEPS_RX.findall(text)
    if matches:
        return int(matches[-1])
    raise ParseError("no step count found", "time")


def parse_schedule(text: str, agent: PlayerId) -> tuple[RoughWorkItem, ...]:
    """Parse the reordered work sequence for one agent."""
    m = _SCHEDULE_MARK_RX.search(text)
    body = text[m.end():] if m else text
    out = []
    for line in body.splitlines():
        try:
            parsed = parse_rough_item(line)
        except ParseError:
            continue
        out.append(RoughWorkItem(agent=agent, kind=parsed.kind, pot=parsed.pot,
                                 est_steps=parsed.est_steps))
    if not out:
        raise ParseError("no scheduled items found", "schedule")
    return tuple(out)


_CONVENTION_HEAD_RX = re.compile(
    r"work\s+content\s+and\s+execution\s+sequence\s+of\s+(AI|Human)\s*[::]", re.I)


def parse_convention(text: str) -> Convention:
    """Inverse of render_convention (transcript ids are not recoverable)."""
    sections: dict[str, str] = {}
    marks = list(_CONVENTION_HEAD_RX.finditer(text))
    if not marks:
        raise ParseError("no convention sections found", "convention")
    for i, m in enumerate(marks):
        end = marks[i + 1].start() if i + 1 < len(marks) else len(text)
        sections[m.group(1).lower()] = text[m.end():end]

    objective: Ingredient | None = None
    plans: dict[str, list[PlanStep]] = {"ai": [], "human": []}
    for name, body in sections.items():
        agent = PlayerId.AI if name == "ai" else PlayerId.HUMAN
        for line in body.splitlines():
            if not line.strip() or line.strip().lower() == "none":
                continue
            try:
                rough = parse_rough_item(line)
            except ParseError:
                continue
            refined = parse_refined(line)
            objective = objective or rough.ingredient
            plans[name].append(PlanStep(
                rough=RoughWorkItem(agent=agent, kind=rough.kind, pot=rough.pot,
                                    est_steps=rough.est_steps),
                refined=refined,
                est_steps=rough.est_steps,
            ))
    if objective is None:
        raise ParseError("no work items in convention", "convention")
    return Convention(objective=objective, ai_plan=tuple(plans["ai"]),
                      human_plan=tuple(plans["human"]))
