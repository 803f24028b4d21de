"""Synthetic vocabularies and the compile / per-step timing methodology.

Compile times are averaged over repeated runs after a warm-up constraint,
then corrected by subtracting the time to compile the trivial pattern
``x``. Per-step overhead covers mask lookup plus advancing on the first
allowed token, restarting from the initial state whenever decoding
cannot continue.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from time import perf_counter

import numpy as np

from .detokenizer import Vocabulary
from .errors import PreconditionError
from .engine import (
    CompiledConstraint,
    allowed_tokens,
    compile_grammar_constraint,
    compile_regex_constraint,
    first_allowed,
    try_advance,
)

GAME_CHARACTER_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "class": {"type": "string", "enum": ["Warrior", "Rogue", "Sorceror"]},
        "life": {"type": "integer"},
        "mana": {"type": "integer"},
        "equipment": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "name": {"type": "string"},
                    "durability": {"type": "integer"},
                    "quality": {"type": "string", "enum": ["Normal", "Magic", "Unique"]},
                },
            },
        },
    },
}


def benchmark_patterns() -> dict[str, str]:
    """The five benchmark constraints, keyed by a short name."""
    from .schema import json_schema_to_regex

    return {
        "multiple_choice": "Red|Orange|Yellow|Green|Blue|Indigo|Violet",
        "iso_datetime": r"\d{4}-[01]\d-[0-3]\dT[0-2]\d:[0-5]\d:[0-5]\d([+-][0-2]\d:[0-5]\d|Z)",
        "ip_address": r"((25[0-5]|2[0-4]\d|[01]?\d\d?)\.){3}(25[0-5]|2[0-4]\d|[01]?\d\d?)",
        "quoted_text": "(?P<QUOTED_TEXT>)",
        "json_object": json_schema_to_regex(GAME_CHARACTER_SCHEMA),
    }


# ---------------------------------------------------------------------------
# synthetic vocabulary


_COMMON = (
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
    " \"'{}[]:,.-_()\\/\n\t+*#=!?<>;@"
)


def synthetic_vocabulary(
    size: int = 256_000,
    seed: int = 0,
    max_len: int = 16,
    exponent: float = 1.6,
    byte_mode: bool = False,
) -> Vocabulary:
    """A vocabulary of distinct tokens over a 256-symbol alphabet.

    Every single symbol is a token, so every text can be tokenized. The
    remaining tokens have power-law lengths (``P(k) ~ k^-exponent``) and
    characters drawn mostly from printable ASCII with a tail over all 256
    byte values. Without byte mode the symbols are the code points 0-255.
    """
    if size < 256:
        raise PreconditionError(f"size must cover the 256 single-symbol tokens, got {size}")
    rng = np.random.default_rng(seed)
    alphabet = np.arange(256)
    weights = np.full(256, 0.2)
    for ch in _COMMON:
        weights[ord(ch)] = 6.0
    weights[ord(" ")] = 20.0
    weights /= weights.sum()
    lengths = np.arange(2, max_len + 1)
    lp = lengths.astype(float) ** -exponent
    lp /= lp.sum()
    seen = {bytes([b]) for b in range(256)}
    tokens = [bytes([b]) for b in range(256)]
    while len(tokens) < size:
        batch = max(1024, (size - len(tokens)) * 2)
        lens = rng.choice(lengths, size=batch, p=lp)
        flat = rng.choice(alphabet, size=int(lens.sum()), p=weights).astype(np.uint8).tobytes()
        pos = 0
        for k in lens:
            tok = flat[pos:pos + k]
            pos += k
            if tok not in seen:
                seen.add(tok)
                tokens.append(tok)
                if len(tokens) == size:
                    break
    if byte_mode:
        return Vocabulary(tuple(tokens), byte_mode=True)
    return Vocabulary(tuple(t.decode("latin-1") for t in tokens))


# ---------------------------------------------------------------------------
# timing


@dataclass
class BenchRow:
    name: str
    compile_ms: float
    compile_ms_raw: float
    compile_stdev_ms: float
    step_us: float
    steps: int
    states: int
    edges: int
    stages_ms: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _compile(kind: str, source: str, vocab: Vocabulary, timings: dict | None = None) -> CompiledConstraint:
    if kind == "grammar":
        return compile_grammar_constraint(source, vocab, timings=timings)
    return compile_regex_constraint(source, vocab, timings=timings)


def time_compile(kind: str, source: str, vocab: Vocabulary, runs: int = 10):
    """Mean and stdev (seconds) of ``runs`` fresh compilations, plus mean stage times."""
    samples = []
    stages: dict[str, list[float]] = {}
    constraint = None
    for _ in range(runs):
        timings: dict = {}
        t0 = perf_counter()
        constraint = _compile(kind, source, vocab, timings)
        samples.append(perf_counter() - t0)
        for k, v in timings.items():
            stages.setdefault(k, []).append(v)
    mean_stages = {k: statistics.fmean(v) for k, v in stages.items()}
    stdev = statistics.stdev(samples) if len(samples) > 1 else 0.0
    return statistics.fmean(samples), stdev, mean_stages, constraint


def time_steps(constraint: CompiledConstraint, steps: int = 10_000) -> float:
    """Mean seconds per mask + advance step, over ``steps`` steps."""
    state = constraint.initial_state()
    start = state
    t0 = perf_counter()
    for _ in range(steps):
        allowed_tokens(constraint, state)
        tok = first_allowed(constraint, state)
        nxt = None if tok is None else try_advance(constraint, state, tok)
        state = start if nxt is None else nxt
    return (perf_counter() - t0) / steps


def run_benchmark(
    vocab: Vocabulary,
    constraints: dict[str, str] | None = None,
    runs: int = 10,
    steps: int = 10_000,
    kind: str = "regex",
) -> list[BenchRow]:
    """Compile and step every constraint; compile times are baseline-corrected."""
    if constraints is None:
        constraints = benchmark_patterns()
    _compile("regex", "warmup|warm[0-9]+", vocab)
    baseline, _, _, _ = time_compile("regex", "x", vocab, runs)
    rows = []
    for name, source in constraints.items():
        mean, stdev, stages, constraint = time_compile(kind, source, vocab, runs)
        step = time_steps(constraint, steps)
        rows.append(BenchRow(
            name=name,
            compile_ms=max(mean - baseline, 0.0) * 1e3,
            compile_ms_raw=mean * 1e3,
            compile_stdev_ms=stdev * 1e3,
            step_us=step * 1e6,
            steps=steps,
            states=constraint.num_states,
            edges=constraint.num_edges,
            stages_ms={k: v * 1e3 for k, v in stages.items()},
        ))
    return rows


def format_table(rows: list[BenchRow]) -> str:
    head = f"{'constraint':<18}{'compile ms':>12}{'raw ms':>10}{'+/-':>8}{'step us':>10}{'states':>8}{'edges':>10}"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(
            f"{r.name:<18}{r.compile_ms:>12.2f}{r.compile_ms_raw:>10.2f}{r.compile_stdev_ms:>8.2f}"
            f"{r.step_us:>10.2f}{r.states:>8d}{r.edges:>10d}"
        )
    return "\n".join(lines)


def rows_to_jsonl(rows: list[BenchRow]) -> str:
    return "\n".join(json.dumps(r.to_json()) for r in rows)
