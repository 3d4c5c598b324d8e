"""Chat backends for the planning sessions.

OracleBackend answers every session prompt deterministically by parsing the
"Now," block and running the closed-form planner, so the full pipeline runs
offline and byte-identically. MockBackend replays scripted responses,
LesionedBackend sabotages traffic for fault-injection tests, and LLMBackend
speaks the usual chat-completions HTTP protocol.
"""
from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import httpx

from . import prompts
from .convention import FetchPlan, RoughWorkItem, SelectorKind
from .kitchen import GridPos, LayoutFacts, PlayerId, manhattan


class BackendError(Exception):
    """Base failure for a chat backend call."""


class Timeout(BackendError):
    pass


class TransportError(BackendError):
    pass


class EmptyResponse(BackendError):
    pass


Message = Mapping[str, str]


class Backend(Protocol):
    def send(self, messages: Sequence[Message]) -> str: ...


def backend_send(backend: Backend, messages: Sequence[Message]) -> str:
    """Send one fresh-session message list and return the assistant text."""
    if not messages:
        raise ValueError("messages must not be empty")
    for m in messages:
        if "role" not in m or "content" not in m:
            raise ValueError("each message needs role and content")
    return backend.send(messages)


@dataclass(frozen=True)
class ChatBackendConfig:
    base_url: str
    model: str
    temperature: float = 0.0
    timeout: float = 30.0
    max_retries: int = 2


def config_from_env(env: Mapping[str, str] | None = None) -> tuple[ChatBackendConfig, str | None]:
    """Read connection settings from HAPLAN_LLM_* environment variables."""
    env = os.environ if env is None else env
    base_url = env.get("HAPLAN_LLM_BASE_URL")
    if not base_url:
        raise ValueError("HAPLAN_LLM_BASE_URL is not set")
    model = env.get("HAPLAN_LLM_MODEL")
    if not model:
        raise ValueError("HAPLAN_LLM_MODEL is not set")
    return ChatBackendConfig(base_url=base_url, model=model), env.get("HAPLAN_LLM_API_KEY")


class LLMBackend:
    """Chat-completions client; retries transport failures, never logs keys."""

    def __init__(self, config: ChatBackendConfig, api_key: str | None = None,
                 client: httpx.Client | None = None):
        self.config = config
        self._api_key = api_key
        self._client = client or httpx.Client(timeout=config.timeout)

    def send(self, messages: Sequence[Message]) -> str:
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        payload = {
            "model": self.config.model,
            "messages": [dict(m) for m in messages],
            "temperature": self.config.temperature,
        }
        headers = {}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        last: BackendError | None = None
        for _ in range(self.config.max_retries + 1):
            try:
                resp = self._client.post(url, json=payload, headers=headers)
            except httpx.TimeoutException as exc:
                last = Timeout(str(exc))
                continue
            except httpx.TransportError as exc:
                last = TransportError(str(exc))
                continue
            if resp.status_code >= 500:
                last = TransportError(f"server returned {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise TransportError(f"request rejected: {resp.status_code}")
            try:
                content = resp.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise EmptyResponse(f"malformed completion payload: {exc}") from exc
            if not content or not content.strip():
                raise EmptyResponse("model returned empty content")
            return content
        raise last if last else TransportError("no attempt made")


class MockBackend:
    """Replays a fixed script of responses; records every prompt it saw."""

    def __init__(self, responses: Iterable[str]):
        self._queue = list(responses)
        self.prompts: list[str] = []

    @classmethod
    def from_file(cls, path: str | Path) -> "MockBackend":
        """Load a script: one JSON value per line, a string or {"response": ...}."""
        responses = []
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            value = json.loads(line)
            responses.append(value if isinstance(value, str) else value["response"])
        return cls(responses)

    def send(self, messages: Sequence[Message]) -> str:
        self.prompts.append(messages[-1]["content"])
        if not self._queue:
            raise EmptyResponse("mock script exhausted")
        return self._queue.pop(0)


class LesionedBackend:
    """Sabotages selected traffic around an inner backend.

    drop_prompt_lines_with removes matching lines from prompts before the
    inner backend sees them (simulating lost carried-over state); corrupt_when
    plus replace rewrites responses to prompts containing a marker (simulating
    a model error at one stage).
    """

    def __init__(self, inner: Backend, *, drop_prompt_lines_with: str | None = None,
                 corrupt_when: str | None = None,
                 replace: tuple[str, str] | None = None):
        self.inner = inner
        self.drop_prompt_lines_with = drop_prompt_lines_with
        self.corrupt_when = corrupt_when
        self.replace = replace

    def send(self, messages: Sequence[Message]) -> str:
        original = messages[-1]["content"]
        if self.drop_prompt_lines_with:
            marker = self.drop_prompt_lines_with
            mutated = []
            for m in messages:
                content = "\n".join(line for line in m["content"].splitlines()
                                    if marker not in line)
                mutated.append(dict(m, content=content))
            messages = mutated
        response = self.inner.send(messages)
        if self.corrupt_when and self.replace and self.corrupt_when in original:
            response = response.replace(*self.replace)
        return response


# ---------------------------------------------------------------------------
# Deterministic oracle backend
# ---------------------------------------------------------------------------

_COORD_RX = re.compile(r"\(\s*(\d+)\s*,\s*(\d+)\s*\)")
_ORDINALS = ("first", "second", "third", "fourth", "fifth", "sixth")


def _ordinal(i: int) -> str:
    return _ORDINALS[i] if i < len(_ORDINALS) else f"{i + 1}th"


def _coords(text: str) -> tuple[GridPos, ...]:
    return tuple(GridPos(int(r), int(c)) for r, c in _COORD_RX.findall(text))


class OracleBackend:
    """Stateless closed-form responder for the session prompts."""

    def send(self, messages: Sequence[Message]) -> str:
        prompt = messages[-1]["content"]
        if prompts.REFINE_TIME_MARKER in prompt:
            return self._answer_refine_time(prompt)
        if prompts.KEY_INFO_MARKER in prompt:
            return self._answer_key_info(prompt)
        if prompts.ROUGH_MARKER in prompt:
            return self._answer_rough(prompt)
        if prompts.REFINE_MARKER in prompt:
            return self._answer_refine(prompt)
        if prompts.TIME_MARKER in prompt:
            return self._answer_time(prompt)
        if prompts.SCHEDULE_MARKER in prompt:
            return self._answer_schedule(prompt)
        raise BackendError("prompt does not match any known session template")

    # -- helpers ---------------------------------------------------------

    @staticmethod
    def _tail(prompt: str, marker: str) -> str:
        idx = prompt.rfind(marker)
        if idx < 0:
            raise BackendError(f"prompt is missing {marker!r}")
        tail = prompt[idx + len(marker):]
        for stop in ("\nPlease provide your answer", "\nPlease give me your answer"):
            cut = tail.find(stop)
            if cut >= 0:
                tail = tail[:cut]
        return tail

    @staticmethod
    def _scenario_facts(tail: str, pot: GridPos) -> LayoutFacts:
        def grab(label: str) -> tuple[GridPos, ...]:
            m = re.search(label + r"[^\n]*", tail)
            return _coords(m.group(0)) if m else ()

        return LayoutFacts(
            pots=(pot,),
            onions=grab(r"Location of Onions\s*:"),
            tomatoes=grab(r"Location of Tomatoes\s*:"),
            dishes=grab(r"Location of the dining plates?\s*:"),
            ports=grab(r"Location of the delivery ports?\s*:"),
        )

    @staticmethod
    def _dist_line(noun: str, i: int, src: GridPos, pot: GridPos) -> str:
        dr, dc = abs(src.row - pot.row), abs(src.col - pot.col)
        from .convention import render_pos

        return (f"For the {_ordinal(i)} {noun} {render_pos(src)}, its distance from "
                f"the pot {render_pos(pot)} is | {src.row}-{pot.row} |+| "
                f"{src.col}-{pot.col} |={dr}+{dc}={dr + dc}. ")

    # -- session answers -------------------------------------------------

    def _answer_key_info(self, prompt: str) -> str:
        from .convention import render_key_info
        from .oracle import interpret_instruction

        instruction = self._tail(prompt, "Now, the instructions for humans are: ").strip()
        return render_key_info(interpret_instruction(instruction))

    def _answer_rough(self, prompt: str) -> str:
        from .convention import (parse_key_info, render_descriptor, render_pos,
                                 render_rough_item)
        from .oracle import resolve_descriptor, rough_items_for

        tail = self._tail(prompt, "Now, the pot in the scene: ")
        pots_line, _, rest = tail.partition("\n")
        pots = _coords(pots_line)
        info = parse_key_info(rest)
        facts = LayoutFacts(pots=pots, onions=(), tomatoes=(), dishes=(), ports=())
        ai, human = rough_items_for(info, facts)

        lines = []
        seen = set()
        for sel in (info.ai_fetch, info.ai_deliver):
            if sel.kind is not SelectorKind.NAMED:
                continue
            for desc in sel.named:
                if desc.coord is None and desc not in seen:
                    seen.add(desc)
                    pos = resolve_descriptor(desc, pots)
                    lines.append(f"{render_descriptor(desc)} is pot {render_pos(pos)}")
        lines.append("So, the rough work contents that AI need to do are:")
        lines += ([f"({i}) {render_rough_item(it, info.objective)}"
                   for i, it in enumerate(ai, 1)] or ["None"])
        lines.append("Correspondingly, the rough tasks that humans need to complete are:")
        lines += ([f"({i}) {render_rough_item(it, info.objective)}"
                   for i, it in enumerate(human, 1)] or ["None"])
        return "\n".join(lines)

    def _refine_plan(self, prompt: str):
        from .convention import parse_rough_item
        from .oracle import parse_constraints, refine

        tail = self._tail(prompt, "Now, the human instructions are: ")
        instruction = tail.partition("\n")[0].strip()
        rough_line = tail.partition("The rough work content is: ")[2].partition("\n")[0]
        rough = parse_rough_item(rough_line)
        constraints = parse_constraints(instruction)
        facts = self._scenario_facts(tail, rough.pot)
        item = RoughWorkItem(agent=PlayerId.AI, kind=rough.kind, pot=rough.pot)
        plan = refine(item, facts, constraints, rough.ingredient)
        return plan, rough, facts, constraints

    def _refine_text(self, plan, rough, facts: LayoutFacts, constraints) -> str:
        from .convention import render_pos, render_refined
        from .oracle import apply_constraints, where_phrase

        lines = []
        if isinstance(plan, FetchPlan):
            ing = plan.ingredient
            relevant = [c for c in constraints if c.item is ing]
            if relevant:
                where = where_phrase(relevant[-1].where)
                lines.append(f"The human instructions require me to pick {ing.plural} "
                             f"from the {ing.value} dots {where}.")
                filtered = apply_constraints(facts.sources(ing), ing, constraints)
                if len(filtered) == 1:
                    lines.append(f"the {ing.value} dots {where} is "
                                 f"{render_pos(plan.source)}.")
                else:
                    lines += [self._dist_line(f"{ing.value} position", i, src, plan.pot)
                              for i, src in enumerate(filtered)]
                    lines.append(f"Therefore, I should choose a location "
                                 f"{render_pos(plan.source)} closer to the pot "
                                 f"{render_pos(plan.pot)} to take the {ing.value}.")
            else:
                lines.append("There are no additional restrictions in the human "
                             f"instructions on where to take {ing.plural}. ")
                lines += [self._dist_line(f"{ing.value} position", i, src, plan.pot)
                          for i, src in enumerate(facts.sources(ing))]
                lines.append(f"Therefore, I should choose a location "
                             f"{render_pos(plan.source)} closer to the pot "
                             f"{render_pos(plan.pot)} to take the {ing.value}.")
        else:
            lines.append("There are no additional restrictions in the human "
                         "instructions on where to pick up the plate and which "
                         "delivery point to deliver it to. ")
            lines += [self._dist_line("dining plate position", i, d, plan.pot)
                      for i, d in enumerate(facts.dishes)]
            lines.append(f"Therefore, I should choose a location "
                         f"{render_pos(plan.dish_source)} closer to the pot "
                         f"{render_pos(plan.pot)} to take a plate.")
            lines += [self._dist_line("delivery port", i, p, plan.pot)
                      for i, p in enumerate(facts.ports)]
            lines.append(f"Therefore, I should choose the delivery port "
                         f"{render_pos(plan.port)} closer to the pot "
                         f"{render_pos(plan.pot)} to deliver the food.")
        lines.append(f"So, the refined work content is: {render_refined(plan)}")
        return "\n".join(lines)

    def _answer_refine(self, prompt: str) -> str:
        return self._refine_text(*self._refine_plan(prompt))

    @staticmethod
    def _time_lines(plan) -> list[str]:
        from .convention import render_pos
        from .oracle import estimate_time

        total = estimate_time(plan)

        def move(a: GridPos, b: GridPos, what: str = "") -> str:
            dr, dc = abs(a.row - b.row), abs(a.col - b.col)
            return (f"Moving{what} from {render_pos(a)} to {render_pos(b)} requires "
                    f"|{a.row}-{b.row}|+|{a.col}-{b.col}|={dr}+{dc}={dr + dc} steps. ")

        if isinstance(plan, FetchPlan):
            d = manhattan(plan.source, plan.pot)
            return [move(plan.source, plan.pot, f" {plan.ingredient.plural}"),
                    f"So, the approximate time is: {d} x 6 = {total} steps."]
        d1 = manhattan(plan.dish_source, plan.pot)
        d2 = manhattan(plan.pot, plan.port)
        d3 = manhattan(plan.port, plan.dish_source)
        return [move(plan.dish_source, plan.pot),
                move(plan.pot, plan.port),
                move(plan.port, plan.dish_source),
                f"So, the approximate time is: {d1} + {d2} + {d3} = {total} steps."]

    def _answer_time(self, prompt: str) -> str:
        from .convention import parse_refined

        tail = self._tail(prompt, "Now, the rough work content is: ")
        refined_line = tail.partition("The refined work content is: ")[2].partition("\n")[0]
        plan = parse_refined(refined_line)
        return "\n".join(self._time_lines(plan))

    def _answer_refine_time(self, prompt: str) -> str:
        plan, rough, facts, constraints = self._refine_plan(prompt)
        return (self._refine_text(plan, rough, facts, constraints) + "\n"
                + "\n".join(self._time_lines(plan)))

    def _answer_schedule(self, prompt: str) -> str:
        from .convention import WorkKind, parse_rough_item, render_rough_item
        from .oracle import schedule

        tail = self._tail(prompt, "Now, the rough work contents are:")
        parsed = [parse_rough_item(line) for line in tail.splitlines() if line.strip()]
        items = [RoughWorkItem(agent=PlayerId.AI, kind=p.kind, pot=p.pot,
                               est_steps=p.est_steps) for p in parsed]
        fetched = {it.pot for it in items if it.kind is WorkKind.FETCH}
        external = frozenset(it.pot for it in items
                             if it.kind is WorkKind.DELIVER and it.pot not in fetched)
        ordered = schedule(items, cook_wait=20, externally_filled=external)
        objective = parsed[0].ingredient
        lines = ["Due to the fact that delivery work for a pot can only be carried "
                 "out 20 time steps after completing its vegetable picking work, in "
                 "order to fully utilize the waiting time, other work should be "
                 "performed during this period.",
                 "Therefore, the work sequence should be adjusted to:"]
        lines += [f"({i}) {render_rough_item(it, objective, with_steps=True)}"
                  for i, it in enumerate(ordered, 1)]
        return "\n".join(lines)


def resolve_backend(name: str) -> Backend:
    """Map a CLI/service backend spec to an instance."""
    if name == "oracle":
        return OracleBackend()
    if name.startswith("mock:"):
        return MockBackend.from_file(name.split(":", 1)[1])
    if name == "llm":
        config, api_key = config_from_env()
        return LLMBackend(config, api_key)
    raise ValueError(f"unknown backend {name!r} (use oracle, mock:<file>, or llm)")
