"""Benchmark harnesses and machine-readable reports.

Coordination benches roll full episodes for every (layout, partner) cell
and report mean and spread of the score; reasoning benches push generated
items through their session protocols and report per-stage accuracy.
Reports are emitted as line-delimited JSON with stable field names.
"""
from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .agents import ConventionAgent
from .backends import Backend, BackendError, resolve_backend
from .episode import StayPolicy, run_episode
from .kitchen import EpisodeConfig, PlayerId, layout_facts, load_layout
from .oracle import PreferenceSpec, gen_instruction
from .pipeline import PROFILES, run_pipeline
from .proxy import make_proxy, parse_proxy_spec
from .reasoning import (
    ReasoningOracle,
    ReasoningTask,
    gen_lastletter,
    gen_scan,
    run_lastletter_item,
    run_scan_item,
)


@dataclass(frozen=True)
class GradeReport:
    """Accuracy over a batch of reasoning items."""

    per_stage: dict[str, float]
    final: float
    n: int


@dataclass(frozen=True)
class PlannerConfig:
    """How the evaluated side builds its plan.

    backend_spec follows the CLI syntax (oracle, mock:<file>, llm) plus
    "stay" for a planner that never acts; instruction defaults to a
    full-coverage request derived from the layout.
    """

    backend_spec: str = "oracle"
    profile: str = "haplan-5"
    instruction: str | None = None


@dataclass(frozen=True)
class BenchCell:
    layout: str
    partner: str
    sessions: int
    backend: str
    n: int
    mean: float
    std: float
    scores: tuple[float, ...] = field(repr=False, default=())


def default_instruction(layout) -> str:
    """A plain full-coverage soup request for the layout's first ingredient."""
    facts = layout_facts(layout)
    pots = set(range(len(facts.pots)))
    spec = PreferenceSpec(facts.ingredients_present[0], pots, pots)
    return gen_instruction(spec, facts)


def reasoning_backend(spec: str) -> Backend:
    """Backend for reasoning sessions; "oracle" means the task oracle."""
    if spec == "oracle":
        return ReasoningOracle()
    return resolve_backend(spec)


def plan_policy(layout, planner: PlannerConfig):
    """The evaluated side's policy plus the session count spent planning."""
    if planner.backend_spec == "stay":
        return StayPolicy(), 0
    backend = resolve_backend(planner.backend_spec)
    profile = PROFILES[planner.profile]
    instruction = planner.instruction or default_instruction(layout)
    convention, transcripts = run_pipeline(instruction, layout, backend,
                                           profile)
    sessions = max(t.session_index for t in transcripts)
    return ConventionAgent(convention, layout, PlayerId.AI), sessions


def run_coord_bench(layouts: Sequence[str], partners: Sequence[str],
                    planner: PlannerConfig = PlannerConfig(),
                    episodes: int = 5, seed: int = 0,
                    config: EpisodeConfig = EpisodeConfig()) -> list[BenchCell]:
    """Score every (layout, partner) cell over `episodes` seeded runs."""
    cells = []
    for layout_name in layouts:
        layout = load_layout(layout_name)
        for partner_spec in partners:
            pref = parse_proxy_spec(partner_spec)
            scores = []
            sessions = 0
            for i in range(episodes):
                run_config = replace(config, seed=seed + i)
                ai, sessions = plan_policy(layout, planner)
                partner = make_proxy(pref, layout, PlayerId.HUMAN, run_config)
                result = run_episode(layout, ai, partner, run_config)
                scores.append(float(result.score))
            cells.append(BenchCell(
                layout=layout_name, partner=partner_spec, sessions=sessions,
                backend=planner.backend_spec, n=episodes,
                mean=statistics.fmean(scores),
                std=statistics.pstdev(scores) if len(scores) > 1 else 0.0,
                scores=tuple(scores)))
    return cells


def run_reasoning_bench(task: ReasoningTask | str, sessions: int,
                        backend: Backend, n: int = 20,
                        params: dict | None = None,
                        seed: int = 0) -> GradeReport:
    """Accuracy of a session protocol over n generated items."""
    if isinstance(task, str):
        task = ReasoningTask(task)
    params = params or {}
    if task is ReasoningTask.LASTLETTER:
        length = int(params.get("length", 8))
        items = gen_lastletter(n, length, seed)
    else:
        items = gen_scan(n, seed)

    correct = 0
    stage_hits: dict[str, int] = {}
    stage_names: list[str] = []
    for item in items:
        try:
            if task is ReasoningTask.LASTLETTER:
                words = [w.strip() for w in item.input_text.split(",")]
                final, records = run_lastletter_item(words, sessions, backend)
            else:
                final, records = run_scan_item(item.input_text, sessions,
                                               backend)
        except BackendError:
            continue
        if final == item.expected:
            correct += 1
        for record in records:
            if record.stage not in stage_names:
                stage_names.append(record.stage)
            if record.ok:
                stage_hits[record.stage] = stage_hits.get(record.stage, 0) + 1
    per_stage = {name: stage_hits.get(name, 0) / n for name in stage_names}
    return GradeReport(per_stage=per_stage, final=correct / n, n=n)


def coord_records(cells: Iterable[BenchCell]) -> list[dict]:
    return [{
        "layout": c.layout, "partner": c.partner, "sessions": c.sessions,
        "backend": c.backend, "n": c.n, "mean": c.mean, "std": c.std,
    } for c in cells]


def reasoning_record(task: ReasoningTask | str, length: int | None,
                     sessions: int, backend: str,
                     report: GradeReport) -> dict:
    if isinstance(task, ReasoningTask):
        task = task.value
    return {
        "task": task, "length": length, "sessions": sessions,
        "backend": backend, "n": report.n, "mean": report.final,
        "std": 0.0, "per_stage": dict(report.per_stage),
    }


def write_report(records: Iterable[dict], path: str | Path) -> None:
    """One JSON object per line; stable keys for downstream tooling."""
    lines = [json.dumps(r, sort_keys=True) for r in records]
    Path(path).write_text("\n".join(lines) + "\n")


def read_report(path: str | Path) -> list[dict]:
    return [json.loads(line) for line in
            Path(path).read_text().splitlines() if line.strip()]
