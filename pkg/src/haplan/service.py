"""HTTP and WebSocket service for live kitchen games and benchmarks.

A game moves through a phase machine: planning (waiting for an
instruction), reviewing (a proposed convention awaits feedback or
acceptance), playing (the tick loop runs), finished (the episode result
is available). The server's game state is the only authority; clients
receive derived snapshots and send actions, nothing else.
"""
from __future__ import annotations

import asyncio
import itertools
from dataclasses import dataclass, field, replace
from enum import Enum

from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .agents import ConventionAgent
from .backends import resolve_backend
from .bench import reasoning_backend, reasoning_record, run_reasoning_bench
from .convention import (
    Convention,
    RoughWorkItem,
    render_convention,
    render_refined,
    render_rough_item,
)
from .episode import (
    EpisodeResult,
    StayPolicy,
    act,
    event_proportions,
    proportions_payload,
)
from .kitchen import (
    Action,
    CleanDish,
    EpisodeConfig,
    GameState,
    Layout,
    PlayerId,
    RawIngredient,
    SoupDish,
    available_layouts,
    initial_state,
    layout_facts,
    load_layout,
    render_layout,
    step_with_events,
)
from .pipeline import (
    PROFILES,
    PlanningContext,
    StageFailed,
    replan,
    run_pipeline,
    transcript_to_dict,
)


class Phase(Enum):
    PLANNING = "planning"
    REVIEWING = "reviewing"
    PLAYING = "playing"
    FINISHED = "finished"


class ServiceError(Exception):
    """An error the HTTP layer reports as {error: {code, stage?, message}}."""

    def __init__(self, status: int, code: str, message: str,
                 stage: int | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.stage = stage


class PhaseError(ServiceError):
    def __init__(self, message: str):
        super().__init__(409, "phase", message)


def error_payload(exc: ServiceError) -> dict:
    body: dict = {"code": exc.code, "message": str(exc)}
    if exc.stage is not None:
        body["stage"] = exc.stage
    return {"error": body}


# ---------------------------------------------------------------------------
# Wire shapes
# ---------------------------------------------------------------------------


def _pos(pos) -> list[int]:
    return [pos.row, pos.col]


def item_payload(item) -> dict | None:
    if item is None:
        return None
    if isinstance(item, RawIngredient):
        return {"kind": item.ingredient.value}
    if isinstance(item, CleanDish):
        return {"kind": "dish"}
    if isinstance(item, SoupDish):
        return {"kind": "soup", "recipe": [i.value for i in item.recipe],
                "origin": _pos(item.origin)}
    raise TypeError(f"unknown item {item!r}")


def layout_payload(name: str, layout: Layout) -> dict:
    facts = layout_facts(layout)
    return {
        "name": name,
        "grid": render_layout(layout).splitlines(),
        "width": layout.width,
        "height": layout.height,
        "pots": len(facts.pots),
        "ingredients": [i.value for i in facts.ingredients_present],
    }


def convention_payload(convention: Convention) -> dict:
    def steps(plan):
        out = []
        for step in plan:
            rough = RoughWorkItem(agent=PlayerId.AI, kind=step.rough.kind,
                                  pot=step.rough.pot, est_steps=step.est_steps)
            out.append({
                "kind": step.rough.kind.value,
                "pot": _pos(step.rough.pot),
                "text": (f"{render_rough_item(rough, convention.objective, with_steps=True)}"
                         f": {render_refined(step.refined)}"),
            })
        return out

    return {
        "objective": convention.objective.value,
        "text": render_convention(convention),
        "ai_steps": steps(convention.ai_plan),
        "human_steps": steps(convention.human_plan),
    }


# ---------------------------------------------------------------------------
# Sessions
# ---------------------------------------------------------------------------


@dataclass
class GameSession:
    """One game's authoritative state, serialized behind its own lock."""

    id: str
    layout_name: str
    layout: Layout
    config: EpisodeConfig
    free_play: bool = False
    phase: Phase = Phase.PLANNING
    state: GameState = None
    ticks: int = 0
    discounted_return: float = 0.0
    events: list = field(default_factory=list)
    instruction: str | None = None
    feedback_history: list[str] = field(default_factory=list)
    convention: Convention | None = None
    transcripts: list = field(default_factory=list)
    chat: list[dict] = field(default_factory=list)
    ai_policy: object | None = None
    result: dict | None = None
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)

    def __post_init__(self) -> None:
        if self.state is None:
            self.state = initial_state(self.layout)


def snapshot(session: GameSession) -> dict:
    state = session.state
    body = {
        "type": "snapshot",
        "game_id": session.id,
        "phase": session.phase.value,
        "tick": state.tick,
        "remaining_ticks": max(session.config.horizon - session.ticks, 0),
        "score": state.score,
        "players": [{
            "id": p.id.value,
            "pos": _pos(p.pos),
            "facing": p.facing.name.lower(),
            "held": item_payload(p.held),
        } for p in state.players],
        "pots": [{
            "pos": _pos(pos),
            "contents": [i.value for i in pot.contents],
            "cook_ticks_remaining": pot.cook_ticks_remaining,
        } for pos, pot in sorted(state.pots.items())],
        "counters": [{
            "pos": _pos(pos),
            "item": item_payload(item),
        } for pos, item in sorted(state.counter_items.items())],
    }
    if session.result is not None:
        body["result"] = session.result
    return body


class CoordService:
    """All live sessions plus the planner configuration they share."""

    def __init__(self, backend: str = "oracle", profile: str = "haplan-5",
                 tick_rate: float = 6.0):
        if profile not in PROFILES:
            raise ValueError(f"unknown profile {profile!r}")
        self.backend_spec = backend
        self.backend = resolve_backend(backend)
        self.profile = PROFILES[profile]
        self.tick_rate = tick_rate
        self.sessions: dict[str, GameSession] = {}
        self._ids = itertools.count(1)

    def create_game(self, layout_name: str, horizon: int | None = None,
                    seed: int | None = None,
                    free_play: bool = False) -> GameSession:
        try:
            layout = load_layout(layout_name)
        except KeyError as exc:
            raise ServiceError(404, "unknown_layout", str(exc.args[0]))
        config = EpisodeConfig()
        if horizon is not None:
            config = replace(config, horizon=horizon)
        if seed is not None:
            config = replace(config, seed=seed)
        session = GameSession(id=f"g{next(self._ids)}", layout_name=layout_name,
                              layout=layout, config=config, free_play=free_play)
        self.sessions[session.id] = session
        return session

    def get(self, game_id: str) -> GameSession:
        session = self.sessions.get(game_id)
        if session is None:
            raise ServiceError(404, "unknown_game", f"no game {game_id!r}")
        return session

    def _planner_backend(self):
        return self.backend

    def plan(self, session: GameSession, text: str) -> None:
        """Run the full pipeline for a fresh instruction (last write wins)."""
        if session.phase not in (Phase.PLANNING, Phase.REVIEWING):
            raise PhaseError("instructions are only accepted before play starts")
        convention, transcripts = self._pipeline(
            run_pipeline, text, session.layout, self._planner_backend(),
            self.profile)
        session.instruction = text
        session.feedback_history.clear()
        self._adopt(session, text, convention, transcripts)

    def give_feedback(self, session: GameSession, text: str) -> None:
        """Re-plan with the feedback appended to the instruction context."""
        if session.phase is not Phase.REVIEWING:
            raise PhaseError("feedback needs a proposed convention to review")
        context = PlanningContext.for_layout(session.layout,
                                             session.instruction)
        context.feedback_history.extend(session.feedback_history)
        convention, transcripts = self._pipeline(
            replan, session.convention, text, context,
            self._planner_backend(), self.profile)
        if text and text.strip():
            session.feedback_history.append(text.strip())
        self._adopt(session, text, convention, transcripts)

    def _pipeline(self, fn, *args):
        try:
            return fn(*args)
        except StageFailed as exc:
            raise ServiceError(422, "stage_failed", str(exc), stage=exc.stage)

    def _adopt(self, session, text, convention, transcripts) -> None:
        session.convention = convention
        session.transcripts = list(transcripts)
        session.phase = Phase.REVIEWING
        session.chat.append({"role": "human", "text": text})
        session.chat.append({"role": "ai", "text": render_convention(convention)})

    def accept(self, session: GameSession) -> None:
        if session.phase is Phase.REVIEWING and session.convention is not None:
            session.ai_policy = ConventionAgent(session.convention,
                                                session.layout, PlayerId.AI,
                                                session.config)
        elif session.free_play and session.phase in (Phase.PLANNING,
                                                     Phase.REVIEWING):
            session.ai_policy = StayPolicy()
        else:
            raise PhaseError("accepting needs a reviewed convention")
        session.phase = Phase.PLAYING

    def advance(self, session: GameSession, human_action: Action) -> None:
        """One authoritative tick; flips to finished at the horizon."""
        if session.phase is not Phase.PLAYING:
            raise PhaseError("the game is not in play")
        ai_action = act(session.ai_policy, session.state, session.layout)
        actions = {PlayerId.AI: ai_action, PlayerId.HUMAN: human_action}
        exponent = session.state.tick
        session.state, reward, events = step_with_events(
            session.state, session.layout, actions, session.config)
        session.discounted_return += session.config.discount ** exponent * reward
        session.events.extend(events)
        session.ticks += 1
        if session.ticks >= session.config.horizon:
            self._finish(session)

    def _finish(self, session: GameSession) -> None:
        session.phase = Phase.FINISHED
        result = EpisodeResult(score=session.state.score,
                               discounted_return=session.discounted_return,
                               event_log=tuple(session.events),
                               seed=session.config.seed, ticks=session.ticks)
        props = event_proportions(result, session.layout)
        session.result = {
            "score": result.score,
            "discounted_return": result.discounted_return,
            "ticks": result.ticks,
            "seed": result.seed,
            "deliveries": result.score // session.config.score_per_soup,
            "event_proportions": proportions_payload(props),
        }


def game_payload(session: GameSession) -> dict:
    return {
        "id": session.id,
        "layout": layout_payload(session.layout_name, session.layout),
        "phase": session.phase.value,
        "free_play": session.free_play,
        "config": {
            "horizon": session.config.horizon,
            "seed": session.config.seed,
            "recipe_size": session.config.recipe_size,
            "cook_time": session.config.cook_time,
            "score_per_soup": session.config.score_per_soup,
        },
        "convention": (convention_payload(session.convention)
                       if session.convention else None),
        "chat": list(session.chat),
        "snapshot": snapshot(session),
    }


# ---------------------------------------------------------------------------
# HTTP surface
# ---------------------------------------------------------------------------


class CreateGameBody(BaseModel):
    layout: str
    horizon: int | None = None
    seed: int | None = None
    free_play: bool = False


class TextBody(BaseModel):
    text: str


class ReasoningBenchBody(BaseModel):
    task: str
    sessions: int = 2
    n: int = 10
    length: int | None = None
    seed: int = 0
    backend: str | None = None


def create_app(backend: str = "oracle", profile: str = "haplan-5",
               tick_rate: float = 6.0,
               static_dir: str | None = None) -> FastAPI:
    service = CoordService(backend=backend, profile=profile,
                           tick_rate=tick_rate)
    app = FastAPI(title="haplan coordination service")
    app.state.service = service
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(ServiceError)
    async def on_service_error(request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status, content=error_payload(exc))

    @app.exception_handler(RequestValidationError)
    async def on_bad_request(request: Request, exc: RequestValidationError):
        message = "; ".join(e["msg"] for e in exc.errors()) or "invalid request"
        return JSONResponse(status_code=422, content={
            "error": {"code": "bad_request", "message": message}})

    @app.get("/api/layouts")
    async def list_layouts():
        return {"layouts": [layout_payload(name, load_layout(name))
                            for name in available_layouts()]}

    @app.post("/api/games")
    async def create_game(body: CreateGameBody):
        session = service.create_game(body.layout, body.horizon, body.seed,
                                      body.free_play)
        return game_payload(session)

    @app.get("/api/games/{game_id}")
    async def get_game(game_id: str):
        return game_payload(service.get(game_id))

    @app.post("/api/games/{game_id}/instruction")
    async def post_instruction(game_id: str, body: TextBody):
        session = service.get(game_id)
        async with session.lock:
            await asyncio.to_thread(service.plan, session, body.text)
            return {
                "phase": session.phase.value,
                "convention": convention_payload(session.convention),
                "transcripts": [transcript_to_dict(t)
                                for t in session.transcripts],
            }

    @app.post("/api/games/{game_id}/feedback")
    async def post_feedback(game_id: str, body: TextBody):
        session = service.get(game_id)
        async with session.lock:
            await asyncio.to_thread(service.give_feedback, session, body.text)
            return {
                "phase": session.phase.value,
                "convention": convention_payload(session.convention),
                "transcripts": [transcript_to_dict(t)
                                for t in session.transcripts],
            }

    @app.post("/api/games/{game_id}/accept")
    async def post_accept(game_id: str):
        session = service.get(game_id)
        async with session.lock:
            service.accept(session)
            return {"phase": session.phase.value}

    @app.post("/api/bench/reasoning")
    async def bench_reasoning(body: ReasoningBenchBody):
        spec = body.backend or "oracle"
        try:
            backend_obj = reasoning_backend(spec)
        except ValueError as exc:
            raise ServiceError(422, "bad_request", str(exc))
        params = {"length": body.length} if body.length else None
        try:
            report = await asyncio.to_thread(
                run_reasoning_bench, body.task, body.sessions, backend_obj,
                body.n, params, body.seed)
        except ValueError as exc:
            raise ServiceError(422, "bad_request", str(exc))
        return reasoning_record(body.task, body.length, body.sessions, spec,
                                report)

    @app.websocket("/api/games/{game_id}/stream")
    async def stream(websocket: WebSocket, game_id: str):
        await websocket.accept()
        session = service.sessions.get(game_id)
        if session is None:
            await websocket.send_json({"error": {
                "code": "unknown_game", "message": f"no game {game_id!r}"}})
            await websocket.close()
            return
        if session.phase not in (Phase.PLAYING, Phase.FINISHED):
            await websocket.send_json({"error": {
                "code": "phase", "message": "the game is not in play"}})
            await websocket.close()
            return
        await websocket.send_json(snapshot(session))
        try:
            while session.phase is Phase.PLAYING:
                action = await _next_action(websocket, service.tick_rate)
                if action is None:
                    continue
                async with session.lock:
                    if session.phase is not Phase.PLAYING:
                        break
                    service.advance(session, action)
                await websocket.send_json(snapshot(session))
        except WebSocketDisconnect:
            return
        await websocket.close()

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="static")

    return app


async def _next_action(websocket: WebSocket, tick_rate: float) -> Action | None:
    """The client's action for this tick; silence within the window is Stay.

    A zero tick rate means lockstep: each tick waits for a client message.
    Returns None after answering a malformed message, so the caller skips
    the tick instead of guessing.
    """
    if tick_rate > 0:
        try:
            message = await asyncio.wait_for(websocket.receive_json(),
                                             timeout=1.0 / tick_rate)
        except asyncio.TimeoutError:
            return Action.STAY
    else:
        message = await websocket.receive_json()
    raw = message.get("action", "stay") if isinstance(message, dict) else None
    try:
        return Action(str(raw).lower())
    except ValueError:
        await websocket.send_json({"error": {
            "code": "bad_action", "message": f"unknown action {raw!r}"}})
        return None
