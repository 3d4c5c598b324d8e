"""Command-line front door: play episodes, benchmark, serve, grade.

Subcommands:
  play             one headless episode against a scripted partner
  bench coord      coordination score sweep over (layout, partner) cells
  bench reasoning  session-protocol accuracy on generated items
  serve            HTTP/WebSocket service for the browser client
  grade            check a play report's transcripts against the oracle

Usage errors exit with code 2; domain errors print ``error: ...`` and
exit with code 1.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .agents import ConventionAgent
from .backends import BackendError, resolve_backend
from .bench import (
    PlannerConfig,
    coord_records,
    default_instruction,
    reasoning_backend,
    reasoning_record,
    run_coord_bench,
    run_reasoning_bench,
    write_report,
)
from .convention import render_convention
from .episode import (
    event_proportions,
    proportions_payload,
    run_episode,
)
from .kitchen import EpisodeConfig, PlayerId, available_layouts, load_layout
from .oracle import (
    grade,
    ground_truth,
    interpret_instruction,
    spec_from_key_info,
)
from .pipeline import (
    PROFILES,
    StageFailed,
    run_pipeline,
    transcript_from_dict,
    transcript_to_dict,
)
from .proxy import make_proxy, parse_proxy_spec
from .reasoning import ReasoningTask


class CLIError(Exception):
    """A problem with the request itself, reported without a traceback."""


def _load_layout(name: str):
    try:
        return load_layout(name)
    except KeyError:
        known = ", ".join(available_layouts())
        raise CLIError(f"unknown layout {name!r} (bundled: {known})") from None


def _split(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(part) for part in _split(text)]
    except ValueError:
        raise CLIError(f"{flag} wants comma-separated integers, "
                       f"got {text!r}") from None


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_play(args: argparse.Namespace) -> int:
    layout = _load_layout(args.layout)
    pref = parse_proxy_spec(args.partner)
    backend = resolve_backend(args.backend)
    profile = PROFILES[args.profile]
    config = EpisodeConfig(horizon=args.horizon, seed=args.seed)

    instruction = args.instruction or default_instruction(layout)
    convention, transcripts = run_pipeline(instruction, layout, backend,
                                           profile)
    ai = ConventionAgent(convention, layout, PlayerId.AI, config)
    partner = make_proxy(pref, layout, PlayerId.HUMAN, config)
    result = run_episode(layout, ai, partner, config)
    props = event_proportions(result, layout)

    deliveries = result.score // config.score_per_soup
    report = {
        "layout": args.layout,
        "partner": args.partner,
        "backend": args.backend,
        "profile": args.profile,
        "instruction": instruction,
        "seed": args.seed,
        "horizon": args.horizon,
        "sessions": max(t.session_index for t in transcripts),
        "score": result.score,
        "deliveries": deliveries,
        "discounted_return": result.discounted_return,
        "convention": render_convention(convention),
        "transcripts": [transcript_to_dict(t) for t in transcripts],
        "event_proportions": proportions_payload(props),
    }
    Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True)
                              + "\n")
    print(f"{args.layout} vs {args.partner}: score {result.score} "
          f"({deliveries} deliveries) in {args.horizon} ticks")
    print(f"report written to {args.out}")
    return 0


def cmd_bench_coord(args: argparse.Namespace) -> int:
    layouts = _split(args.layouts) if args.layouts else available_layouts()
    for name in layouts:
        _load_layout(name)
    partners = _split(args.partners)
    if not partners:
        raise CLIError("--partners wants at least one proxy spec")
    planner = PlannerConfig(backend_spec=args.backend, profile=args.profile)
    config = EpisodeConfig(horizon=args.horizon)
    cells = run_coord_bench(layouts, partners, planner,
                            episodes=args.episodes, seed=args.seed,
                            config=config)
    records = coord_records(cells)
    write_report(records, args.out)
    for rec in records:
        print(f"{rec['layout']:<22} {rec['partner']:<30} "
              f"mean {rec['mean']:6.1f}  std {rec['std']:5.1f}")
    print(f"report written to {args.out}")
    return 0


def cmd_bench_reasoning(args: argparse.Namespace) -> int:
    task = ReasoningTask(args.task)
    records = []
    if task is ReasoningTask.LASTLETTER:
        for length in _int_list(args.lengths, "--lengths"):
            backend = reasoning_backend(args.backend)
            report = run_reasoning_bench(task, args.sessions, backend,
                                         n=args.n,
                                         params={"length": length},
                                         seed=args.seed)
            records.append(reasoning_record(task, length, args.sessions,
                                            args.backend, report))
    else:
        backend = reasoning_backend(args.backend)
        report = run_reasoning_bench(task, args.sessions, backend,
                                     n=args.n, seed=args.seed)
        records.append(reasoning_record(task, None, args.sessions,
                                        args.backend, report))
    for rec in records:
        where = f"length {rec['length']}" if rec["length"] else "commands"
        print(f"{rec['task']} {where}, {rec['sessions']} session(s), "
              f"n={rec['n']}: accuracy {rec['mean']:.3f}")
    if args.out:
        write_report(records, args.out)
        print(f"report written to {args.out}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    if args.static is not None and not Path(args.static).is_dir():
        raise CLIError(f"--static {args.static!r} is not a directory")
    app = create_app(backend=args.backend, profile=args.profile,
                     tick_rate=args.tick_rate, static_dir=args.static)
    print(f"listening on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_grade(args: argparse.Namespace) -> int:
    try:
        data = json.loads(Path(args.report).read_text())
    except json.JSONDecodeError as exc:
        raise CLIError(f"{args.report} is not valid JSON: {exc}") from None
    try:
        layout = _load_layout(data["layout"])
        instruction = data["instruction"]
        transcripts = [transcript_from_dict(t) for t in data["transcripts"]]
    except KeyError as exc:
        raise CLIError(f"report lacks required field {exc.args[0]!r}") \
            from None

    info = interpret_instruction(instruction, layout)
    spec = spec_from_key_info(info, layout)
    truth = ground_truth(spec, layout)
    verdict = grade(transcripts, truth)
    for stage, ok in verdict.stages.items():
        print(f"{stage:<12} {'ok' if ok else 'FAIL'}")
    print(f"{'final':<12} {'ok' if verdict.final else 'FAIL'}")
    return 0 if verdict.all_true else 1


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _planner_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", default="oracle",
                        help="planning backend: oracle, mock:<file>, or llm")
    parser.add_argument("--profile", default="haplan-5",
                        choices=sorted(PROFILES),
                        help="session decomposition profile")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="haplan",
        description="Kitchen coordination workbench: play, benchmark, "
                    "serve, grade.")
    sub = parser.add_subparsers(dest="command", required=True)

    play = sub.add_parser("play", help="run one headless episode")
    play.add_argument("--layout", required=True, help="bundled layout name")
    play.add_argument("--partner", required=True,
                      help="scripted partner, e.g. proxy:placement:onion:all")
    _planner_flags(play)
    play.add_argument("--horizon", type=int, default=400,
                      help="episode length in ticks")
    play.add_argument("--seed", type=int, default=0)
    play.add_argument("--instruction", default=None,
                      help="planning instruction (default covers the "
                           "whole layout)")
    play.add_argument("--out", default="play_report.json",
                      help="where to write the episode report")
    play.set_defaults(run=cmd_play)

    bench = sub.add_parser("bench", help="run a benchmark sweep")
    bench_sub = bench.add_subparsers(dest="bench_command", required=True)

    coord = bench_sub.add_parser("coord",
                                 help="coordination scores per cell")
    coord.add_argument("--layouts", default="",
                       help="comma-separated layout names (default: all)")
    coord.add_argument("--partners", default="proxy:delivery::all",
                       help="comma-separated proxy specs")
    _planner_flags(coord)
    coord.add_argument("--episodes", type=int, default=5,
                       help="seeded episodes per cell")
    coord.add_argument("--horizon", type=int, default=400)
    coord.add_argument("--seed", type=int, default=0)
    coord.add_argument("--out", default="coord_bench.jsonl")
    coord.set_defaults(run=cmd_bench_coord)

    reasoning = bench_sub.add_parser("reasoning",
                                     help="session-protocol accuracy")
    reasoning.add_argument("--task", required=True,
                           choices=[t.value for t in ReasoningTask])
    reasoning.add_argument("--sessions", type=int, default=2,
                           help="how many sessions split the work")
    reasoning.add_argument("--lengths", default="8",
                           help="comma-separated word counts "
                                "(lastletter only)")
    reasoning.add_argument("--n", type=int, default=20,
                           help="generated items per setting")
    reasoning.add_argument("--backend", default="oracle",
                           help="oracle, mock:<file>, or llm")
    reasoning.add_argument("--seed", type=int, default=0)
    reasoning.add_argument("--out", default=None,
                           help="optional report path")
    reasoning.set_defaults(run=cmd_bench_reasoning)

    serve = sub.add_parser("serve", help="start the coordination service")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    _planner_flags(serve)
    serve.add_argument("--tick-rate", type=float, default=6.0,
                       help="play-phase ticks per second; 0 waits for "
                            "every client message")
    serve.add_argument("--static", default=None, metavar="DIR",
                       help="also serve a built browser client from DIR")
    serve.set_defaults(run=cmd_serve)

    grade_cmd = sub.add_parser(
        "grade", help="grade a play report's planning transcripts")
    grade_cmd.add_argument("--report", required=True,
                           help="report file produced by `haplan play`")
    grade_cmd.set_defaults(run=cmd_grade)

    return parser


def cli_main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 2
    try:
        return args.run(args)
    except (CLIError, ValueError, OSError, StageFailed,
            BackendError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(cli_main())
