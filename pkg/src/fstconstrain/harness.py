"""A seeded mock language model, decode loops, and brute-force oracles.

Logit vectors have ``|V| + 1`` entries; the last one is end-of-sequence,
which the constraint's finish bit gates. All decoding here is greedy unless
a policy says otherwise, so runs are reproducible from the seed alone.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .automata import as_symbols, fsa_accepts, pda_accepts
from .detokenizer import Vocabulary
from .engine import CompiledConstraint, advance, allowed_tokens, apply_mask, rewind, try_advance
from .errors import BudgetExceeded, PreconditionError
from .mask import TokenMask


@dataclass(frozen=True)
class MockLm:
    """Deterministic pseudo-random logits keyed by (seed, history).

    With ``script`` and ``bias`` set, tokens that continue the script from
    the current detokenized text get ``+bias``, and end-of-sequence gets it
    once the script is complete. With ``base`` set, the logits are the base
    model's plus ``noise`` times this model's own draw, which makes a cheap
    approximation of ``base`` for speculative decoding.
    """

    seed: int
    vocab: Vocabulary
    bias: float = 0.0
    script: str | bytes | None = None
    base: MockLm | None = None
    noise: float = 1.0

    @property
    def eos(self) -> int:
        return len(self.vocab)

    def _draw(self, history: Sequence[int]) -> np.ndarray:
        h = hashlib.blake2b(digest_size=16)
        h.update(self.seed.to_bytes(8, "little", signed=True))
        h.update(np.asarray(history, dtype="<i8").tobytes())
        rng = np.random.default_rng(int.from_bytes(h.digest(), "little"))
        return rng.standard_normal(len(self.vocab) + 1)

    def logits(self, history: Sequence[int]) -> np.ndarray:
        out = self._draw(history)
        if self.base is not None:
            out = self.base.logits(history) + self.noise * out
        if self.script is not None and self.bias:
            text = self.vocab.detokenize(history)
            if self.script[: len(text)] == text:
                rest = self.script[len(text):]
                if not rest:
                    out[self.eos] += self.bias
                table = self.vocab.ids_by_string
                for k in range(1, len(rest) + 1):
                    for tid in table.get(rest[:k], ()):
                        out[tid] += self.bias
        return out


@dataclass
class DecodeResult:
    seed: int
    tokens: list
    text: str
    finished: bool
    steps: int
    conformant: bool | None = None
    acceptance_rate: float | None = None
    proposed: int = 0
    accepted: int = 0

    @property
    def truncated(self) -> bool:
        return not self.finished

    def to_json(self) -> dict:
        d = asdict(self)
        d["truncated"] = self.truncated
        return d


def _text(vocab: Vocabulary, tokens: Sequence[int]) -> str:
    out = vocab.detokenize(tokens)
    return out.decode("latin-1") if isinstance(out, bytes) else out


def _choose(scores: np.ndarray, rng: np.random.Generator | None) -> int:
    if rng is None:
        return int(np.argmax(scores))
    finite = np.isfinite(scores)
    z = np.where(finite, scores - scores[finite].max(), -np.inf)
    p = np.exp(z)
    return int(rng.choice(len(p), p=p / p.sum()))


def constrained_decode(
    lm: MockLm,
    constraint: CompiledConstraint,
    max_steps: int = 256,
    sample: bool = False,
) -> DecodeResult:
    """Decode under the constraint's masks until end-of-sequence or ``max_steps`` choices."""
    if max_steps < 1:
        raise PreconditionError("max_steps must be at least 1")
    constraint.check_vocabulary(lm.vocab)
    rng = np.random.default_rng(lm.seed) if sample else None
    state = constraint.initial_state()
    finished = False
    steps = 0
    for steps in range(1, max_steps + 1):
        mask = allowed_tokens(constraint, state)
        if mask.is_empty() and not mask.finish:
            break  # stranded; cannot happen once dead states are pruned
        choice = _choose(apply_mask(lm.logits(state.tokens), mask), rng)
        if choice == lm.eos:
            finished = True
            break
        state = advance(constraint, state, choice)
    tokens = state.tokens
    return DecodeResult(lm.seed, tokens, _text(lm.vocab, tokens), finished, steps)


def unconstrained_decode(lm: MockLm, max_steps: int = 256) -> DecodeResult:
    """Greedy decoding over the raw logits of the same stream."""
    tokens: list[int] = []
    finished = False
    steps = 0
    for steps in range(1, max_steps + 1):
        choice = int(np.argmax(lm.logits(tokens)))
        if choice == lm.eos:
            finished = True
            break
        tokens.append(choice)
    return DecodeResult(lm.seed, tokens, _text(lm.vocab, tokens), finished, steps)


def speculative_decode(
    draft: MockLm,
    target: MockLm,
    constraint: CompiledConstraint,
    block: int = 4,
    max_steps: int = 256,
) -> DecodeResult:
    """Draft proposes up to ``block`` constrained tokens, target verifies greedily.

    The target scores each proposed position under the mask the draft
    already computed there, accepts the longest prefix matching its own
    argmax, and substitutes its choice at the first disagreement; the
    constraint state is rewound past the rejected suffix. The output is
    identical to target-only greedy constrained decoding.
    """
    if block < 1:
        raise PreconditionError("block must be at least 1")
    if max_steps < 1:
        raise PreconditionError("max_steps must be at least 1")
    constraint.check_vocabulary(target.vocab)
    eos = target.eos
    state = constraint.initial_state()
    steps = 0  # choices committed, end-of-sequence included
    proposed = accepted = 0
    finished = False
    while steps < max_steps and not finished:
        budget = min(block, max_steps - steps)
        masks: list[TokenMask] = []
        guesses: list[int] = []
        s = state
        for _ in range(budget):
            mask = allowed_tokens(constraint, s)
            masks.append(mask)
            g = _choose(apply_mask(draft.logits(s.tokens), mask), None)
            guesses.append(g)
            if g == eos:
                break
            s = advance(constraint, s, g)
        proposed += len(guesses)
        # verify with the shared masks; no automaton traversal needed
        base = state.tokens
        prefix = list(base)
        take = None
        for i, (mask, g) in enumerate(zip(masks, guesses)):
            t = _choose(apply_mask(target.logits(prefix), mask), None)
            if t != g:
                take = (i, t)
                break
            accepted += 1
            prefix.append(g)
        if take is None:
            n = len(guesses)
            steps += n
            finished = guesses[-1] == eos
            state = s
            continue
        i, t = take
        state = rewind(s, len(guesses) - i - (1 if guesses[-1] == eos else 0))
        steps += i + 1
        if t == eos:
            finished = True
        else:
            state = advance(constraint, state, t)
    tokens = state.tokens
    rate = accepted / proposed if proposed else 0.0
    return DecodeResult(
        target.seed, tokens, _text(target.vocab, tokens), finished, steps,
        acceptance_rate=rate, proposed=proposed, accepted=accepted,
    )


# ---------------------------------------------------------------------------
# oracles


def brute_force_accepted_set(
    constraint: CompiledConstraint,
    max_len: int,
    budget: int = 2_000_000,
) -> set[tuple[int, ...]]:
    """Every token sequence of length at most ``max_len`` the constraint accepts.

    Steps the token automaton depth-first; only viable prefixes are
    extended, but every visited node counts against ``budget``.
    """
    out: set[tuple[int, ...]] = set()
    visited = 0
    stack = [(constraint.initial_state(), ())]
    while stack:
        state, seq = stack.pop()
        visited += 1
        if visited > budget:
            raise BudgetExceeded(f"more than {budget} prefixes")
        mask = allowed_tokens(constraint, state)
        if mask.finish:
            out.add(seq)
        if len(seq) == max_len:
            continue
        for t in mask.ids():
            nxt = try_advance(constraint, state, t)
            if nxt is not None:
                stack.append((nxt, seq + (t,)))
    return out


def detokenize_match_set(
    vocab: Vocabulary,
    in_language: Callable[[object], bool],
    max_len: int,
    budget: int = 5_000_000,
) -> set[tuple[int, ...]]:
    """``{x : |x| <= max_len and in_language(D(x))}`` by plain enumeration."""
    ids = vocab.text_ids
    total = sum(len(ids) ** k for k in range(max_len + 1))
    if total > budget:
        raise BudgetExceeded(f"{total} sequences exceed the budget of {budget}")
    out = set()
    for k in range(max_len + 1):
        for seq in itertools.product(ids, repeat=k):
            if in_language(vocab.detokenize(seq)):
                out.add(seq)
    return out


def language_predicate(constraint: CompiledConstraint, vocab: Vocabulary) -> Callable[[object], bool]:
    """Membership in the constraint's character language, from the source alone.

    Rebuilds the character automaton (no vocabulary involved), so it is an
    independent check on composition.
    """
    universe = 0xFF if vocab.byte_mode else None
    if constraint.kind == "regex":
        from .regex import compile_regex

        fsa = compile_regex(constraint.source) if universe is None else compile_regex(constraint.source, universe)
        return lambda text: fsa_accepts(fsa, as_symbols(text))
    from .grammar import compile_grammar_pda

    pda = compile_grammar_pda(constraint.source) if universe is None else compile_grammar_pda(constraint.source, universe)
    return lambda text: pda_accepts(pda, as_symbols(text))


# ---------------------------------------------------------------------------
# batch runs


@dataclass
class ConformanceReport:
    constraint: str
    runs: int
    constrained_rate: float
    unconstrained_rate: float
    truncated: int
    results: list = field(default_factory=list, repr=False)


def conformance_run(
    constraint: CompiledConstraint,
    vocab: Vocabulary,
    seeds: Iterable[int],
    in_language: Callable[[object], bool] | None = None,
    max_steps: int = 256,
    name: str = "",
    keep_results: bool = False,
) -> ConformanceReport:
    """Constrained and unconstrained greedy decodes on the same logit streams."""
    if in_language is None:
        in_language = language_predicate(constraint, vocab)
    ok = raw_ok = truncated = runs = 0
    kept = []
    for seed in seeds:
        lm = MockLm(seed, vocab)
        res = constrained_decode(lm, constraint, max_steps)
        res.conformant = res.finished and in_language(vocab.detokenize(res.tokens))
        raw = unconstrained_decode(lm, max_steps)
        raw.conformant = raw.finished and in_language(vocab.detokenize(raw.tokens))
        runs += 1
        ok += res.conformant
        raw_ok += raw.conformant
        truncated += res.truncated
        if keep_results:
            kept.append(res)
    return ConformanceReport(
        name or constraint.source, runs, ok / max(runs, 1), raw_ok / max(runs, 1), truncated, kept,
    )


def results_to_jsonl(results: Iterable[DecodeResult]) -> str:
    return "\n".join(json.dumps(r.to_json(), ensure_ascii=False) for r in results)
