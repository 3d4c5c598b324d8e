"""Self-contained reasoning tasks with multi-session decompositions.

Two task families: last-letter concatenation over a bundled word list, and
a command language of movement phrases translated to action sequences.
Both come with deterministic interpreters (the grading oracles), seeded
generators, and session protocols that split one item across several fresh
backend sessions, carrying only a small running result between them.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources

from .backends import Backend, BackendError, backend_send


class ReasoningTask(Enum):
    LASTLETTER = "lastletter"
    SCAN = "scan"


@dataclass(frozen=True)
class ReasoningItem:
    task: ReasoningTask
    input_text: str
    expected: str


class GrammarError(ValueError):
    """The command does not belong to the movement-command language."""


# ---------------------------------------------------------------------------
# Last-letter concatenation
# ---------------------------------------------------------------------------


def word_list() -> tuple[str, ...]:
    text = (resources.files("haplan") / "assets" / "words.txt").read_text()
    return tuple(w for w in text.split() if w)


def lastletter_expected(words: list[str]) -> str:
    return "".join(w[-1] for w in words)


def gen_lastletter(n: int, length: int, seed: int) -> list[ReasoningItem]:
    """n items of `length` words each, drawn from the bundled list."""
    if length < 1:
        raise ValueError("items need at least one word")
    rng = random.Random(seed)
    pool = word_list()
    items = []
    for _ in range(n):
        words = rng.sample(pool, length)
        items.append(ReasoningItem(ReasoningTask.LASTLETTER,
                                   ", ".join(words),
                                   lastletter_expected(words)))
    return items


# ---------------------------------------------------------------------------
# Movement commands
# ---------------------------------------------------------------------------

_PRIMITIVES = {
    "walk": "WALK",
    "run": "RUN",
    "jump": "JUMP",
    "look": "LOOK",
}
_TURNS = {"left": "TURN_LEFT", "right": "TURN_RIGHT"}
_REPEATS = {"twice": 2, "thrice": 3}


def _interpret_phrase(tokens: list[str]) -> list[str]:
    """One connective-free phrase: primitive, optional direction, repetition."""
    if not tokens:
        raise GrammarError("empty phrase")
    repeat = 1
    if tokens[-1] in _REPEATS:
        repeat = _REPEATS[tokens[-1]]
        tokens = tokens[:-1]
    if not tokens:
        raise GrammarError("repetition without a command")
    head, rest = tokens[0], tokens[1:]
    if head == "turn":
        body: list[str] = []
    elif head in _PRIMITIVES:
        body = [_PRIMITIVES[head]]
    else:
        raise GrammarError(f"unknown command word {head!r}")
    if not rest:
        if head == "turn":
            raise GrammarError("'turn' needs a direction")
        once = body
    elif len(rest) == 1 and rest[0] in _TURNS:
        once = [_TURNS[rest[0]]] + body
    elif len(rest) == 2 and rest[0] == "opposite" and rest[1] in _TURNS:
        once = [_TURNS[rest[1]]] * 2 + body
    elif len(rest) == 2 and rest[0] == "around" and rest[1] in _TURNS:
        once = ([_TURNS[rest[1]]] + body) * 4
    else:
        raise GrammarError(f"bad modifier {' '.join(rest)!r}")
    return once * repeat


def split_command(command: str) -> list[str]:
    """Sub-commands of a command, in execution order.

    'X and Y' runs X then Y; 'X after Y' runs Y then X. A command holds at
    most one connective.
    """
    tokens = command.strip().lower().split()
    if not tokens:
        raise GrammarError("empty command")
    connectives = [i for i, t in enumerate(tokens) if t in ("and", "after")]
    if not connectives:
        return [" ".join(tokens)]
    if len(connectives) > 1:
        raise GrammarError("at most one connective per command")
    i = connectives[0]
    first, second = tokens[:i], tokens[i + 1:]
    if not first or not second:
        raise GrammarError(f"dangling {tokens[i]!r}")
    if tokens[i] == "after":
        first, second = second, first
    return [" ".join(first), " ".join(second)]


def scan_interpret(command: str) -> str:
    """Translate a movement command to its action sequence."""
    actions: list[str] = []
    for sub in split_command(command):
        actions.extend(_interpret_phrase(sub.split()))
    return " ".join(actions)


def gen_scan(n: int, seed: int) -> list[ReasoningItem]:
    """n random well-formed commands with their action sequences."""
    rng = random.Random(seed)
    items = []
    for _ in range(n):
        command = _random_command(rng)
        items.append(ReasoningItem(ReasoningTask.SCAN, command,
                                   scan_interpret(command)))
    return items


def _random_phrase(rng: random.Random) -> str:
    head = rng.choice(sorted(_PRIMITIVES) + ["turn"])
    parts = [head]
    modifier = rng.random()
    if head == "turn" or modifier < 0.6:
        if modifier < 0.2:
            parts.append(rng.choice(["opposite", "around"]))
        parts.append(rng.choice(sorted(_TURNS)))
    if rng.random() < 0.4:
        parts.append(rng.choice(sorted(_REPEATS)))
    return " ".join(parts)


def _random_command(rng: random.Random) -> str:
    if rng.random() < 0.5:
        return _random_phrase(rng)
    connective = rng.choice(["and", "after"])
    return f"{_random_phrase(rng)} {connective} {_random_phrase(rng)}"


# ---------------------------------------------------------------------------
# Session protocols
# ---------------------------------------------------------------------------

_RUNNING_RX = re.compile(r'^Running answer: "([a-z]*)"$', re.MULTILINE)
_WORDS_RX = re.compile(r"^New words: (.+)$", re.MULTILINE)
_COMMAND_RX = re.compile(r"^Command: (.+)$", re.MULTILINE)
_BLOCK_RX = re.compile(r"\n\n(.+)\n\nReply", re.DOTALL)


def lastletter_prompt(running: str, words: list[str]) -> str:
    return (
        "Take the last letter of each new word, in order, and append the "
        "letters to the running answer.\n"
        f'Running answer: "{running}"\n'
        f"New words: {', '.join(words)}\n"
        "Reply with the updated running answer only."
    )


def scan_prompt(command: str) -> str:
    return (
        "Translate the command into an action sequence. Actions are WALK, "
        "RUN, JUMP, LOOK, TURN_LEFT, TURN_RIGHT.\n"
        f"Command: {command}\n"
        "Reply with the action sequence on one line."
    )


def split_prompt(command: str) -> str:
    return (
        "Split the command into its sub-commands, in the order they are "
        "executed. 'X and Y' runs X then Y; 'X after Y' runs Y then X.\n"
        f"Command: {command}\n"
        "Reply with one sub-command per line."
    )


def translate_join_prompt(subs: list[str]) -> str:
    return (
        "Translate each sub-command into actions (WALK, RUN, JUMP, LOOK, "
        "TURN_LEFT, TURN_RIGHT) and join the results in order.\n\n"
        + "\n".join(subs)
        + "\n\nReply with the full action sequence on one line."
    )


def translate_each_prompt(subs: list[str]) -> str:
    return (
        "Translate each sub-command into actions (WALK, RUN, JUMP, LOOK, "
        "TURN_LEFT, TURN_RIGHT).\n\n"
        + "\n".join(subs)
        + "\n\nReply with one action sequence per line, in the same order."
    )


def join_prompt(sequences: list[str]) -> str:
    return (
        "Join these action sequences into a single line, in order, checking "
        "that every token is a valid action.\n\n"
        + "\n".join(sequences)
        + "\n\nReply with the joined sequence on one line."
    )


def chunk_words(words: list[str], sessions: int) -> list[list[str]]:
    """Contiguous chunks, one per session, sizes as even as possible."""
    k = min(sessions, len(words))
    size, extra = divmod(len(words), k)
    out = []
    start = 0
    for i in range(k):
        end = start + size + (1 if i < extra else 0)
        out.append(words[start:end])
        start = end
    return out


_VALID_ACTIONS = frozenset(_PRIMITIVES.values()) | frozenset(_TURNS.values())


def parse_letters(response: str) -> str:
    text = response.strip().strip('"')
    if not re.fullmatch(r"[a-z]*", text):
        raise GrammarError(f"not a letter string: {response!r}")
    return text


def parse_actions(response: str) -> str:
    text = " ".join(response.strip().split())
    tokens = text.split(" ") if text else []
    if not tokens or any(t not in _VALID_ACTIONS for t in tokens):
        raise GrammarError(f"not an action sequence: {response!r}")
    return text


@dataclass(frozen=True)
class SessionRecord:
    stage: str
    prompt: str
    response: str
    ok: bool


def run_lastletter_item(words: list[str], sessions: int,
                        backend: Backend) -> tuple[str, list[SessionRecord]]:
    """Walk the chunks through fresh sessions, carrying the running answer.

    A malformed response leaves the carry unchanged and marks its session
    wrong; the final answer then fails the exact-match grade on its own.
    """
    running = ""
    records = []
    for i, chunk in enumerate(chunk_words(words, sessions), start=1):
        prompt = lastletter_prompt(running, chunk)
        response = backend_send(backend, [{"role": "user", "content": prompt}])
        expected = running + lastletter_expected(chunk)
        try:
            running = parse_letters(response)
        except GrammarError:
            records.append(SessionRecord(f"session_{i}", prompt, response, False))
            continue
        records.append(SessionRecord(f"session_{i}", prompt, response,
                                     running == expected))
    return running, records


def run_scan_item(command: str, sessions: int,
                  backend: Backend) -> tuple[str, list[SessionRecord]]:
    """Translate one command in 1, 2, or 3 fresh sessions."""
    records = []

    def ask(stage, prompt, check):
        response = backend_send(backend, [{"role": "user", "content": prompt}])
        records.append(SessionRecord(stage, prompt, response, check(response)))
        return response

    if sessions <= 1:
        final = ask("translate", scan_prompt(command),
                    lambda r: r.strip() == scan_interpret(command))
        return final.strip(), records

    subs_text = ask("split", split_prompt(command),
                    lambda r: [l.strip() for l in r.strip().splitlines()]
                    == split_command(command))
    subs = [l.strip() for l in subs_text.strip().splitlines() if l.strip()]
    if not subs:
        raise GrammarError("split produced no sub-commands")
    if sessions == 2:
        final = ask("translate", translate_join_prompt(subs),
                    lambda r: r.strip() == scan_interpret(command))
        return final.strip(), records

    seq_text = ask("translate", translate_each_prompt(subs),
                   lambda r: [l.strip() for l in r.strip().splitlines()]
                   == [" ".join(_interpret_phrase(s.split())) for s in subs])
    sequences = [l.strip() for l in seq_text.strip().splitlines() if l.strip()]
    final = ask("join", join_prompt(sequences),
                lambda r: r.strip() == scan_interpret(command))
    return final.strip(), records


# ---------------------------------------------------------------------------
# A backend that actually does the work
# ---------------------------------------------------------------------------


class ForgetfulBackend:
    """Wipes the carried running answer before the inner backend sees it.

    Models a session protocol that fails to hand state forward: each
    session answers as if the work so far never happened.
    """

    def __init__(self, inner: Backend):
        self.inner = inner

    def send(self, messages) -> str:
        patched = [dict(m, content=_RUNNING_RX.sub('Running answer: ""',
                                                   m["content"]))
                   for m in messages]
        return self.inner.send(patched)


class ReasoningOracle:
    """Deterministic responder for every reasoning session prompt."""

    def send(self, messages) -> str:
        prompt = messages[-1]["content"]
        if "Running answer" in prompt:
            running = _RUNNING_RX.search(prompt)
            words = _WORDS_RX.search(prompt)
            if not running or not words:
                raise BackendError("malformed last-letter prompt")
            names = [w.strip() for w in words.group(1).split(",")]
            return running.group(1) + lastletter_expected(names)
        if prompt.startswith("Translate the command"):
            command = _COMMAND_RX.search(prompt)
            if not command:
                raise BackendError("malformed translate prompt")
            return scan_interpret(command.group(1))
        if prompt.startswith("Split the command"):
            command = _COMMAND_RX.search(prompt)
            if not command:
                raise BackendError("malformed split prompt")
            return "\n".join(split_command(command.group(1)))
        if prompt.startswith("Translate each sub-command"):
            block = _BLOCK_RX.search(prompt)
            if not block:
                raise BackendError("malformed sub-command prompt")
            subs = [l for l in block.group(1).splitlines() if l.strip()]
            sequences = [" ".join(_interpret_phrase(s.split())) for s in subs]
            if "join the results" in prompt:
                return " ".join(sequences)
            return "\n".join(sequences)
        if prompt.startswith("Join these action sequences"):
            block = _BLOCK_RX.search(prompt)
            if not block:
                raise BackendError("malformed join prompt")
            lines = [l for l in block.group(1).splitlines() if l.strip()]
            return " ".join(" ".join(l.split()) for l in lines)
        raise BackendError(f"unrecognized reasoning prompt: {prompt[:60]!r}")
