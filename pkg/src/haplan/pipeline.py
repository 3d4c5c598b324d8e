"""Multi-session planning orchestration.

Each planning sub-problem runs in a fresh chat session: build the prompt from
the stage template plus rendered prior-stage outputs, send it, parse the
response, and feed the parsed result forward. The final Convention is
assembled from parsed outputs only, never from raw response text.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Mapping

from . import prompts
from .backends import Backend, backend_send
from .convention import (
    Convention,
    KeyInfo,
    ParseError,
    PlanStep,
    RoughPlanParse,
    RoughWorkItem,
    parse_key_info,
    parse_refined,
    parse_rough_plan,
    parse_schedule,
    parse_time,
    render_key_info,
    render_pos,
    render_refined,
    render_rough_item,
    validate_convention,
)
from .kitchen import Layout, LayoutFacts, PlayerId, layout_facts

PARSE_RETRIES = 2
CLARIFICATION = "Answer strictly in the example format."


class StageFailed(Exception):
    """A session could not produce a usable answer."""

    def __init__(self, stage: int, cause: Exception):
        super().__init__(f"stage {stage} failed: {cause}")
        self.stage = stage
        self.cause = cause


class MissingPriorOutput(Exception):
    """A stage prompt was requested before its inputs exist."""

    def __init__(self, stage: str):
        super().__init__(f"stage {stage!r} is missing a prior stage's output")
        self.stage = stage


@dataclass(frozen=True)
class Stage:
    index: int
    name: str
    template_id: str
    parser_id: str


@dataclass(frozen=True)
class DecompositionProfile:
    """How the planning problem is grouped into sessions."""

    name: str
    stages: tuple[Stage, ...]

    def stage(self, name: str) -> Stage:
        for s in self.stages:
            if s.name == name:
                return s
        raise KeyError(name)


HAPLAN_5 = DecompositionProfile("haplan-5", (
    Stage(1, "key_info", "key_info", "parse_key_info"),
    Stage(2, "rough", "rough", "parse_rough_plan"),
    Stage(3, "refine", "refine", "parse_refined"),
    Stage(4, "time", "time", "parse_time"),
    Stage(5, "schedule", "schedule", "parse_schedule"),
))

HAPLAN_4 = DecompositionProfile("haplan-4", (
    Stage(1, "key_info", "key_info", "parse_key_info"),
    Stage(2, "rough", "rough", "parse_rough_plan"),
    Stage(3, "refine_time", "refine_time", "parse_refined+parse_time"),
    Stage(4, "schedule", "schedule", "parse_schedule"),
))

PROFILES = {p.name: p for p in (HAPLAN_5, HAPLAN_4)}


@dataclass(frozen=True)
class SessionTranscript:
    """One fresh-session exchange; sessions share no conversational history."""

    session_index: int
    stage: str
    prompt: str
    response: str
    parsed_ok: bool
    item_index: int | None = None
    agent: PlayerId | None = None


def transcript_to_dict(transcript: SessionTranscript) -> dict:
    return {
        "session_index": transcript.session_index,
        "stage": transcript.stage,
        "prompt": transcript.prompt,
        "response": transcript.response,
        "parsed_ok": transcript.parsed_ok,
        "item_index": transcript.item_index,
        "agent": transcript.agent.value if transcript.agent else None,
    }


def transcript_from_dict(data: dict) -> SessionTranscript:
    return SessionTranscript(
        session_index=data["session_index"],
        stage=data["stage"],
        prompt=data.get("prompt", ""),
        response=data["response"],
        parsed_ok=data.get("parsed_ok", True),
        item_index=data.get("item_index"),
        agent=PlayerId(data["agent"]) if data.get("agent") else None,
    )


@dataclass
class PlanningContext:
    """Scene facts and the running human instruction state for one game."""

    facts: LayoutFacts
    instruction: str
    feedback_history: list[str] = field(default_factory=list)
    cook_wait: int = 20

    @classmethod
    def for_layout(cls, layout: Layout | LayoutFacts, instruction: str) -> "PlanningContext":
        facts = layout if isinstance(layout, LayoutFacts) else layout_facts(layout)
        return cls(facts=facts, instruction=instruction)

    @property
    def instruction_block(self) -> str:
        return " ".join([self.instruction, *self.feedback_history])


def _scenario_text(facts: LayoutFacts) -> str:
    def fmt(positions) -> str:
        return ", ".join(render_pos(p) for p in positions) if positions else "None"

    return "\n".join([
        f"Location of Tomatoes: {fmt(facts.tomatoes)}",
        f"Location of Onions: {fmt(facts.onions)}",
        f"Location of the dining plates: {fmt(facts.dishes)}",
        f"Location of the delivery ports: {fmt(facts.ports)}",
    ])


def build_prompt(profile: DecompositionProfile, stage: Stage | str,
                 context: PlanningContext, prior_outputs: Mapping[str, object],
                 *, item_index: int | None = None,
                 agent: PlayerId | None = None) -> str:
    """Instantiate a stage template with layout facts and prior parsed outputs."""
    if isinstance(stage, str):
        stage = profile.stage(stage)
    name = stage.template_id

    def need(key: str):
        if key not in prior_outputs:
            raise MissingPriorOutput(stage.name)
        return prior_outputs[key]

    if name == "key_info":
        return prompts.build_key_info_prompt(context.instruction_block)

    if name == "rough":
        info: KeyInfo = need("key_info")
        pots = ", ".join(render_pos(p) for p in context.facts.pots)
        return prompts.build_rough_prompt(pots, render_key_info(info, numbered=True))

    info = need("key_info")
    items: tuple[RoughWorkItem, ...] = need("rough_items")

    if name in ("refine", "refine_time"):
        if item_index is None or not 0 <= item_index < len(items):
            raise MissingPriorOutput(stage.name)
        rough = render_rough_item(items[item_index], info.objective)
        builder = (prompts.build_refine_prompt if name == "refine"
                   else prompts.build_refine_time_prompt)
        return builder(context.instruction_block, rough, _scenario_text(context.facts))

    if name == "time":
        refined = need("refined")
        if item_index is None or not 0 <= item_index < len(refined):
            raise MissingPriorOutput(stage.name)
        rough = render_rough_item(items[item_index], info.objective)
        return prompts.build_time_prompt(rough, render_refined(refined[item_index]))

    if name == "schedule":
        times = need("times")
        agent_items = [(it, t) for it, t in zip(items, times) if it.agent is agent]
        if not agent_items:
            raise MissingPriorOutput(stage.name)
        lines = [f"({i}) {render_rough_item(replace(it, est_steps=t), info.objective, with_steps=True)}"
                 for i, (it, t) in enumerate(agent_items, 1)]
        return prompts.build_schedule_prompt("\n".join(lines))

    raise MissingPriorOutput(stage.name)


def _parse_rough_nonempty(response: str) -> RoughPlanParse:
    parsed = parse_rough_plan(response)
    if not parsed.ai and not parsed.human:
        raise ParseError("no work items in either section", "rough_plan")
    return parsed


def _run(context: PlanningContext, backend: Backend,
         profile: DecompositionProfile) -> tuple[Convention, list[SessionTranscript]]:
    transcripts: list[SessionTranscript] = []
    counter = itertools.count(1)

    def call(stage: Stage, prompt: str, parser, item_index=None, agent=None):
        last_error: ParseError | None = None
        for attempt in range(PARSE_RETRIES + 1):
            text = prompt if attempt == 0 else f"{prompt}\n{CLARIFICATION}"
            try:
                response = backend_send(backend, [{"role": "user", "content": text}])
            except Exception as exc:
                raise StageFailed(stage.index, exc) from exc
            try:
                parsed = parser(response)
            except ParseError as exc:
                transcripts.append(SessionTranscript(
                    next(counter), stage.name, text, response, False, item_index, agent))
                last_error = exc
                continue
            transcripts.append(SessionTranscript(
                next(counter), stage.name, text, response, True, item_index, agent))
            return parsed
        raise StageFailed(stage.index, last_error)

    prior: dict[str, object] = {}
    schedules: dict[PlayerId, tuple[RoughWorkItem, ...]] = {}
    for stage in profile.stages:
        if stage.name == "key_info":
            prior["key_info"] = call(
                stage, build_prompt(profile, stage, context, prior), parse_key_info)
        elif stage.name == "rough":
            parsed = call(stage, build_prompt(profile, stage, context, prior),
                          _parse_rough_nonempty)
            prior["rough"] = parsed
            prior["rough_items"] = parsed.ai + parsed.human
        elif stage.name == "refine":
            refined = []
            for i in range(len(prior["rough_items"])):
                prompt = build_prompt(profile, stage, context, prior, item_index=i)
                refined.append(call(stage, prompt, parse_refined, item_index=i))
            prior["refined"] = tuple(refined)
        elif stage.name == "time":
            times = []
            for i in range(len(prior["rough_items"])):
                prompt = build_prompt(profile, stage, context, prior, item_index=i)
                times.append(call(stage, prompt, parse_time, item_index=i))
            prior["times"] = tuple(times)
        elif stage.name == "refine_time":
            refined, times = [], []

            def parse_both(response: str):
                return parse_refined(response), parse_time(response)

            for i in range(len(prior["rough_items"])):
                prompt = build_prompt(profile, stage, context, prior, item_index=i)
                plan, t = call(stage, prompt, parse_both, item_index=i)
                refined.append(plan)
                times.append(t)
            prior["refined"] = tuple(refined)
            prior["times"] = tuple(times)
        elif stage.name == "schedule":
            for agent in (PlayerId.AI, PlayerId.HUMAN):
                if not any(it.agent is agent for it in prior["rough_items"]):
                    schedules[agent] = ()
                    continue
                prompt = build_prompt(profile, stage, context, prior, agent=agent)

                def parse_for(response: str, agent=agent):
                    return parse_schedule(response, agent)

                schedules[agent] = call(stage, prompt, parse_for, agent=agent)

    convention = _assemble(prior, schedules, transcripts, profile)
    validate_convention(convention, context.facts)
    return convention, transcripts


def _assemble(prior: Mapping[str, object],
              schedules: Mapping[PlayerId, tuple[RoughWorkItem, ...]],
              transcripts: list[SessionTranscript],
              profile: DecompositionProfile) -> Convention:
    info: KeyInfo = prior["key_info"]
    items = prior["rough_items"]
    refined_by, time_by = {}, {}
    for item, ref, t in zip(items, prior["refined"], prior["times"]):
        key = (item.agent,) + item.unit
        refined_by[key] = ref
        time_by[key] = t

    plans = {}
    for agent in (PlayerId.AI, PlayerId.HUMAN):
        steps = []
        for item in schedules.get(agent, ()):
            key = (agent,) + item.unit
            if key not in refined_by:
                raise StageFailed(profile.stages[-1].index, ParseError(
                    f"scheduled item not in the rough plan: {item.unit}", "schedule"))
            steps.append(PlanStep(rough=item, refined=refined_by[key],
                                  est_steps=time_by[key]))
        plans[agent] = tuple(steps)
    return Convention(
        objective=info.objective,
        ai_plan=plans[PlayerId.AI],
        human_plan=plans[PlayerId.HUMAN],
        transcript_ids=tuple(t.session_index for t in transcripts),
    )


def run_pipeline(instruction: str, layout: Layout | LayoutFacts, backend: Backend,
                 profile: DecompositionProfile = HAPLAN_5,
                 ) -> tuple[Convention, list[SessionTranscript]]:
    """Formulate a Convention from a human instruction, one session per stage."""
    context = PlanningContext.for_layout(layout, instruction)
    return _run(context, backend, profile)


def replan(prior: Convention, feedback: str, context: PlanningContext,
           backend: Backend, profile: DecompositionProfile = HAPLAN_5,
           ) -> tuple[Convention, list[SessionTranscript]]:
    """Re-run every stage with the feedback appended to the instruction block."""
    if feedback and feedback.strip():
        context.feedback_history.append(feedback.strip())
    return _run(context, backend, profile)
