"""Token-level constraints: compilation and the per-step decoding contract.

A regex constraint is the character DFA composed with the vocabulary trie:
its states are the DFA states reachable at token boundaries and the edge
``q --t--> q'`` exists iff reading token ``t``'s characters from ``q`` ends in
``q'``. That is exactly the epsilon-free, determinized composition with the
trie-form detokenizer, computed here one trie level at a time with numpy.

A grammar constraint is the epsilon-free character PDA composed the same
way; its edges may pop and push several stack symbols.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from time import perf_counter
from typing import Iterable, Sequence

import numpy as np

from ._kernels import compose_scan
from .automata import (
    DEFAULT_STATE_CAP,
    Fsa,
    Pda,
    combine_stack_ops,
    is_deterministic,
    is_terminal_label,
    label_ranges,
    stack_ends_with,
)
from .detokenizer import Vocabulary, VocabTrie
from .errors import ConstraintViolation, IntegrityError, PreconditionError, VocabularyMismatch
from .mask import TokenMask
from .regex import parse_regex, terminal_mask


class TerminalOverlapWarning(UserWarning):
    """A state has a normal token edge and a terminal edge matching the same token."""


# ---------------------------------------------------------------------------
# decode state


@dataclass(frozen=True)
class DecodeState:
    """An immutable decoding configuration with a parent link for rewinding.

    ``stack`` is bottom-to-top and stays empty for regex constraints.
    """

    state: int
    stack: tuple = ()
    parent: DecodeState | None = field(default=None, repr=False, compare=False)
    token: int | None = None
    popped: tuple = ()
    depth: int = 0

    @property
    def history(self) -> list[tuple[int, int, int, tuple]]:
        """``(token, prior state, prior stack length, popped symbols)`` per step."""
        steps = []
        node = self
        while node.parent is not None:
            prior = node.parent
            steps.append((node.token, prior.state, len(prior.stack), node.popped))
            node = prior
        steps.reverse()
        return steps

    @property
    def tokens(self) -> list[int]:
        return [step[0] for step in self.history]

    def __len__(self) -> int:
        return self.depth


def rewind(state: DecodeState, k: int) -> DecodeState:
    """The configuration that existed ``k`` tokens earlier."""
    if k < 0 or k > state.depth:
        raise PreconditionError(f"cannot rewind {k} tokens from a history of {state.depth}")
    for _ in range(k):
        state = state.parent
    return state


# ---------------------------------------------------------------------------
# compiled constraint


@dataclass(frozen=True)
class TokenFsa:
    """Deterministic token automaton in CSR form.

    Edges are grouped by source state; within a state they follow the
    trie walk, not token order.
    """

    num_states: int
    initial: int
    finals: np.ndarray  # bool per state
    offsets: np.ndarray
    tokens: np.ndarray
    targets: np.ndarray
    terminal_edges: tuple  # per state: tuple of (label id, target) in precedence order

    @property
    def num_edges(self) -> int:
        return int(len(self.tokens)) + sum(len(t) for t in self.terminal_edges)

    def to_fsa(self) -> Fsa:
        edges = []
        for q in range(self.num_states):
            a, b = self.offsets[q], self.offsets[q + 1]
            edges.extend((q, int(t), int(g)) for t, g in zip(self.tokens[a:b], self.targets[a:b]))
            edges.extend((q, lab, g) for lab, g in self.terminal_edges[q])
        return Fsa(self.num_states, self.initial, set(np.flatnonzero(self.finals).tolist()), edges)


@dataclass(frozen=True)
class PdaGroup:
    """Token edges out of one state that share the same pop sequence."""

    pops: tuple
    tokens: np.ndarray  # sorted
    targets: np.ndarray
    push_ids: np.ndarray  # index into TokenPda.push_table


@dataclass(frozen=True)
class TokenPda:
    num_states: int
    initial: int
    initial_stack: int
    groups: tuple  # per state: tuple of PdaGroup
    accept_pops: tuple  # per state: tuple of pop sequences that lead to acceptance
    push_table: tuple
    symbol_names: dict
    state_names: tuple = ()

    @cached_property
    def suffix_len(self) -> list[int]:
        out = []
        for q in range(self.num_states):
            lens = [len(g.pops) for g in self.groups[q]] + [len(p) for p in self.accept_pops[q]]
            out.append(max(lens, default=0))
        return out

    @property
    def num_edges(self) -> int:
        return sum(len(g.tokens) for gs in self.groups for g in gs)

    def to_pda(self) -> Pda:
        edges = []
        accept = self.num_states
        for q in range(self.num_states):
            for g in self.groups[q]:
                for t, tgt, pid in zip(g.tokens, g.targets, g.push_ids):
                    edges.append((q, int(t), g.pops, int(tgt), self.push_table[int(pid)]))
            for pops in self.accept_pops[q]:
                edges.append((q, None, pops, accept, ()))
        symbols = {self.initial_stack}
        for e in edges:
            symbols.update(e[2])
            symbols.update(e[4])
        return Pda(
            self.num_states + 1, self.initial, {accept}, edges, symbols, self.initial_stack,
            None, (), dict(self.symbol_names),
        )


@dataclass
class CompiledConstraint:
    """A token automaton ready for masking, bound to one vocabulary.

    Caches (masks, lookup tables) fill lazily and are only ever added to, so
    one instance can be shared by concurrent sessions.
    """

    kind: str  # "regex" or "grammar"
    vocab_size: int
    fingerprint: str
    automaton: TokenFsa | TokenPda
    terminals: tuple = ()
    terminal_masks: dict = field(default_factory=dict)
    source: str = ""
    stats: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    _mask_cache: dict = field(default_factory=dict, repr=False)
    _lookup_cache: dict = field(default_factory=dict, repr=False)

    @property
    def num_states(self) -> int:
        return self.automaton.num_states

    @property
    def num_edges(self) -> int:
        return self.automaton.num_edges

    def initial_state(self) -> DecodeState:
        if self.kind == "regex":
            return DecodeState(self.automaton.initial)
        return DecodeState(self.automaton.initial, (self.automaton.initial_stack,))

    def check_vocabulary(self, vocab: Vocabulary) -> None:
        if vocab.fingerprint != self.fingerprint or len(vocab) != self.vocab_size:
            raise VocabularyMismatch("constraint was compiled for a different vocabulary")

    def accepts(self, tokens: Iterable[int]) -> bool:
        state = self.initial_state()
        for t in tokens:
            nxt = try_advance(self, state, t)
            if nxt is None:
                return False
            state = nxt
        return allowed_tokens(self, state).finish


# ---------------------------------------------------------------------------
# regex compilation


def char_transition_table(fsa: Fsa, chars: np.ndarray) -> np.ndarray:
    """``delta[q, i]`` = target of reading ``chars[i]`` in state ``q``, or -1."""
    delta = np.full((fsa.num_states, max(len(chars), 1)), -1, dtype=np.int64)
    for src, label, tgt in fsa.edges:
        if label is None or is_terminal_label(label):
            continue
        for lo, hi in label_ranges(label):
            a = int(np.searchsorted(chars, lo, "left"))
            b = int(np.searchsorted(chars, hi, "right"))
            if a < b:
                delta[src, a:b] = tgt
    return delta


def _expand(counts: np.ndarray):
    """For groups of the given sizes: group index and rank of every member."""
    total = int(counts.sum())
    group = np.repeat(np.arange(len(counts)), counts)
    starts = np.cumsum(counts) - counts
    rank = np.arange(total) - starts[group]
    return group, rank


def walk_trie_dfa(trie: VocabTrie, delta: np.ndarray, sources: np.ndarray):
    """All ``(src, token, tgt)`` with ``delta*(src, token) == tgt`` for ``src`` in ``sources``."""
    n_chars = delta.shape[1]
    flat = delta.ravel()
    node = np.zeros(len(sources), dtype=np.int64)
    src = np.asarray(sources, dtype=np.int64)
    cur = src.copy()
    found_src, found_tok, found_tgt = [], [], []
    child_start, child_count = trie.child_start, trie.child_count
    node_char, tok_start, tok_ids = trie.node_char, trie.tok_start, trie.tok_ids
    while len(node):
        cnt = child_count[node]
        keep = cnt > 0
        if not keep.all():
            node, src, cur, cnt = node[keep], src[keep], cur[keep], cnt[keep]
            if not len(node):
                break
        grp, rank = _expand(cnt)
        child = child_start[node][grp] + rank
        nxt = flat[cur[grp] * n_chars + node_char[child]]
        ok = nxt >= 0
        child, nxt, src = child[ok], nxt[ok], src[grp[ok]]
        first = tok_start[child]
        ntok = tok_start[child + 1] - first
        has = ntok > 0
        if has.any():
            g2, r2 = _expand(ntok[has])
            found_tok.append(tok_ids[first[has][g2] + r2])
            found_src.append(src[has][g2])
            found_tgt.append(nxt[has][g2])
        node, cur = child, nxt
    if not found_src:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty
    return np.concatenate(found_src), np.concatenate(found_tok), np.concatenate(found_tgt)


def _live_states(n: int, initial: int, finals: np.ndarray, src: np.ndarray, tgt: np.ndarray) -> np.ndarray:
    """States reachable from ``initial`` that can reach a final state."""
    if len(src):
        src, tgt = src.astype(np.int64), tgt.astype(np.int64)
        if n * n <= 1 << 24:
            seen = np.zeros(n * n, dtype=bool)
            seen[src * n + tgt] = True
            pairs = np.flatnonzero(seen)
        else:
            pairs = np.unique(src * n + tgt)
        ps, pt = pairs // n, pairs % n
    else:
        ps = pt = np.zeros(0, dtype=np.int64)

    def closure(starts, a, b):
        order = np.argsort(a, kind="stable")
        a, b = a[order], b[order]
        off = np.searchsorted(a, np.arange(n + 1))
        seen = np.zeros(n, dtype=bool)
        seen[starts] = True
        frontier = np.asarray(starts, dtype=np.int64)
        while len(frontier):
            lo, hi = off[frontier], off[frontier + 1]
            g, r = _expand(hi - lo)
            nxt = np.unique(b[lo[g] + r])
            nxt = nxt[~seen[nxt]]
            seen[nxt] = True
            frontier = nxt
        return seen

    forward = closure([initial], ps, pt)
    backward = closure(np.flatnonzero(finals), pt, ps)
    live = forward & backward
    live[initial] = True
    return live


def compile_fsa_constraint(
    char_fsa: Fsa,
    vocab: Vocabulary,
    source: str = "",
    timings: dict | None = None,
) -> CompiledConstraint:
    """Compose a deterministic character automaton with the vocabulary."""
    if not is_deterministic(char_fsa):
        raise PreconditionError("character automaton must be deterministic")
    t0 = perf_counter()
    trie = vocab.trie
    delta = char_transition_table(char_fsa, trie.chars)
    n = char_fsa.num_states
    tok, tgt, counts = compose_scan(
        trie.pre_depth, trie.pre_sym, trie.pre_end, trie.pre_tok_start, trie.pre_tok_ids,
        delta, np.arange(n, dtype=np.int64), max(trie.depth, 1),
    )
    src = np.repeat(np.arange(n, dtype=np.int32), counts)
    term_src, term_lab, term_tgt = [], [], []
    for s, label, t in char_fsa.edges:
        if is_terminal_label(label):
            term_src.append(s)
            term_lab.append(label)
            term_tgt.append(t)
    term_src_a = np.asarray(term_src, dtype=np.int64)
    term_tgt_a = np.asarray(term_tgt, dtype=np.int64)
    t1 = perf_counter()

    finals = np.zeros(n, dtype=bool)
    finals[list(char_fsa.finals)] = True
    live = _live_states(
        n, char_fsa.initial, finals,
        np.concatenate([src, term_src_a]), np.concatenate([tgt, term_tgt_a]),
    )
    order_states = np.flatnonzero(live)
    m = len(order_states)
    remap = np.full(n, -1, dtype=np.int64)
    remap[order_states] = np.arange(m)
    if m < n:
        keep = live[src] & live[tgt]
        counts = np.bincount(remap[src[keep]], minlength=m)
        tok, tgt = tok[keep], remap[tgt[keep]].astype(np.int32)
    offsets = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    term_edges: list[list] = [[] for _ in range(m)]
    labels = {lab.id: lab for lab in char_fsa.terminals}
    for s, lab, t in zip(term_src, term_lab, term_tgt):
        if live[s] and live[t]:
            term_edges[remap[s]].append((lab, int(remap[t])))
    for edges in term_edges:
        edges.sort(key=lambda e: labels[e[0]].precedence)
    automaton = TokenFsa(
        m, int(remap[char_fsa.initial]), finals[order_states].copy(), offsets,
        tok, tgt, tuple(tuple(e) for e in term_edges),
    )
    masks = {lab.id: terminal_mask(lab, vocab).bits for lab in char_fsa.terminals}
    t2 = perf_counter()
    constraint = CompiledConstraint(
        "regex", len(vocab), vocab.fingerprint, automaton, tuple(char_fsa.terminals), masks, source,
    )
    constraint.warnings.extend(_terminal_overlaps(constraint))
    for w in constraint.warnings:
        warnings.warn(w, TerminalOverlapWarning, stacklevel=3)
    constraint.stats.update(
        states=m, edges=automaton.num_edges, char_states=n,
    )
    if timings is not None:
        timings["compose"] = t1 - t0
        timings["optimize_tokens"] = t2 - t1
    return constraint


def _terminal_overlaps(constraint: CompiledConstraint) -> list[str]:
    auto = constraint.automaton
    out = []
    for q in range(auto.num_states):
        if not auto.terminal_edges[q]:
            continue
        a, b = auto.offsets[q], auto.offsets[q + 1]
        toks = auto.tokens[a:b]
        for lab, _ in auto.terminal_edges[q]:
            hits = int(constraint.terminal_masks[lab][toks].sum()) if b > a else 0
            if hits:
                name = next(t.name for t in constraint.terminals if t.id == lab)
                out.append(f"state {q}: {hits} token(s) match both a normal edge and {name}")
    return out


def compile_regex_constraint(
    pattern: str,
    vocab: Vocabulary,
    max_states: int = DEFAULT_STATE_CAP,
    timings: dict | None = None,
) -> CompiledConstraint:
    """Token constraint accepting ``x`` iff the detokenization of ``x`` matches ``pattern``."""
    if not len(vocab.text_ids):
        raise PreconditionError("vocabulary has no text tokens")
    from .automata import determinize, minimize, trim
    from .regex import thompson

    universe = 0xFF if vocab.byte_mode else None
    t0 = perf_counter()
    ast = parse_regex(pattern)
    t1 = perf_counter()
    nfa = thompson(ast) if universe is None else thompson(ast, universe)
    char_fsa = minimize(trim(determinize(nfa, max_states=max_states)))
    t2 = perf_counter()
    stage = {}
    constraint = compile_fsa_constraint(char_fsa, vocab, pattern, stage)
    if timings is not None:
        timings.update(parse=t1 - t0, optimize_chars=t2 - t1, **stage)
    return constraint


# ---------------------------------------------------------------------------
# grammar compilation


def compose_trie_pda(char_pda: Pda, vocab: Vocabulary) -> TokenPda:
    """Compose an epsilon-free character PDA with the vocabulary trie.

    Edges into final states on epsilon are acceptance edges; every other
    edge must consume a character. Tokens are walked symbolically: the walk
    tracks the pops owed to the stack below and the pushes made so far.
    """
    trie = vocab.trie
    chars = trie.chars.tolist()
    accept_states = set(char_pda.finals)
    by_char: list[dict[int, list]] = [dict() for _ in range(char_pda.num_states)]
    accept_pops: list[set] = [set() for _ in range(char_pda.num_states)]
    for src, label, pops, tgt, pushes in char_pda.edges:
        if label is None:
            if tgt not in accept_states:
                raise PreconditionError("character PDA still has epsilon edges")
            accept_pops[src].add(pops)
            continue
        for lo, hi in label_ranges(label):
            a = int(np.searchsorted(trie.chars, lo, "left"))
            b = int(np.searchsorted(trie.chars, hi, "right"))
            for ci in range(a, b):
                by_char[src].setdefault(ci, []).append((pops, tgt, pushes))
    child_start = trie.child_start.tolist()
    child_count = trie.child_count.tolist()
    node_char = trie.node_char.tolist()
    tok_start = trie.tok_start.tolist()
    tok_ids = trie.tok_ids.tolist()
    del chars

    entries = [char_pda.initial]
    seen_entry = {char_pda.initial}
    found: dict[tuple, set] = {}  # (src, pops, tgt, pushes) -> tokens
    k = 0
    while k < len(entries):
        p = entries[k]
        k += 1
        stack = [(0, frozenset([(p, (), ())]))]
        while stack:
            node, configs = stack.pop()
            for child in range(child_start[node], child_start[node] + child_count[node]):
                ci = node_char[child]
                nxt = set()
                for q, pops, pushes in configs:
                    for epops, t, epushes in by_char[q].get(ci, ()):
                        comb = combine_stack_ops(pops, pushes, epops, epushes)
                        if comb is not None:
                            nxt.add((t, comb[0], comb[1]))
                if not nxt:
                    continue
                for ti in range(tok_start[child], tok_start[child + 1]):
                    tok = tok_ids[ti]
                    for q, pops, pushes in nxt:
                        found.setdefault((p, pops, q, pushes), set()).add(tok)
                        if q not in seen_entry:
                            seen_entry.add(q)
                            entries.append(q)
                if child_count[child]:
                    stack.append((child, frozenset(nxt)))

    # keep states that can still finish, ignoring the stack
    n = char_pda.num_states
    back: dict[int, set] = {}
    for (s, _, t, _), _toks in found.items():
        back.setdefault(t, set()).add(s)
    can_finish = {q for q in range(n) if accept_pops[q]}
    work = list(can_finish)
    while work:
        q = work.pop()
        for s in back.get(q, ()):
            if s not in can_finish:
                can_finish.add(s)
                work.append(s)
    states = [q for q in entries if q in can_finish or q == char_pda.initial]
    remap = {q: i for i, q in enumerate(states)}
    push_index: dict[tuple, int] = {}
    grouped: list[dict[tuple, list]] = [dict() for _ in states]
    for (s, pops, t, pushes), toks in found.items():
        if s not in remap or t not in remap:
            continue
        pid = push_index.setdefault(pushes, len(push_index))
        bucket = grouped[remap[s]].setdefault(pops, [])
        for tok in toks:
            bucket.append((tok, remap[t], pid))
    groups = []
    for table in grouped:
        gs = []
        for pops in sorted(table, key=lambda p: (len(p), p)):
            rows = sorted(table[pops])
            toks = np.array([r[0] for r in rows], dtype=np.int64)
            gs.append(PdaGroup(
                pops, toks, np.array([r[1] for r in rows], dtype=np.int64),
                np.array([r[2] for r in rows], dtype=np.int64),
            ))
        groups.append(tuple(gs))
    push_table = [None] * len(push_index)
    for pushes, pid in push_index.items():
        push_table[pid] = pushes
    names = tuple(char_pda.state_name(q) for q in states) if char_pda.state_names else ()
    return TokenPda(
        len(states), remap[char_pda.initial], char_pda.initial_stack, tuple(groups),
        tuple(tuple(sorted(accept_pops[q])) for q in states), tuple(push_table),
        dict(char_pda.symbol_names), names,
    )


def token_pda_from_pda(pda: Pda, vocab_size: int) -> TokenPda:
    """Index a generic token-labelled PDA (e.g. from ``compose_fst_pda``)."""
    n = pda.num_states
    push_index: dict[tuple, int] = {}
    grouped: list[dict] = [dict() for _ in range(n)]
    accept: list[set] = [set() for _ in range(n)]
    for src, label, pops, tgt, pushes in pda.edges:
        if label is None:
            if tgt not in pda.finals:
                raise PreconditionError("token PDA still has epsilon edges")
            accept[src].add(pops)
            continue
        if not isinstance(label, int) or not 0 <= label < vocab_size:
            raise PreconditionError(f"label {label!r} is not a token id")
        pid = push_index.setdefault(pushes, len(push_index))
        grouped[src].setdefault(pops, set()).add((label, tgt, pid))
    groups = []
    for table in grouped:
        gs = []
        for pops in sorted(table, key=lambda p: (len(p), p)):
            rows = sorted(table[pops])
            gs.append(PdaGroup(
                pops, np.array([r[0] for r in rows], dtype=np.int64),
                np.array([r[1] for r in rows], dtype=np.int64),
                np.array([r[2] for r in rows], dtype=np.int64),
            ))
        groups.append(tuple(gs))
    push_table = [None] * len(push_index)
    for pushes, pid in push_index.items():
        push_table[pid] = pushes
    return TokenPda(
        n, pda.initial, pda.initial_stack, tuple(groups),
        tuple(tuple(sorted(a)) for a in accept), tuple(push_table), dict(pda.symbol_names),
    )


def compile_grammar_constraint(
    grammar_text: str,
    vocab: Vocabulary,
    timings: dict | None = None,
) -> CompiledConstraint:
    """Token constraint accepting ``x`` iff the detokenization of ``x`` is in the grammar's language.

    Raises :class:`DeterminismError` if the grammar's PDA is not deterministic.
    """
    from .grammar import build_grammar_pda, epsilon_free_pda, parse_grammar, require_deterministic

    if not len(vocab.text_ids):
        raise PreconditionError("vocabulary has no text tokens")
    universe = 0xFF if vocab.byte_mode else None
    t0 = perf_counter()
    grammar = parse_grammar(grammar_text)
    t1 = perf_counter()
    pda = build_grammar_pda(grammar) if universe is None else build_grammar_pda(grammar, universe)
    char_pda = epsilon_free_pda(pda)
    require_deterministic(char_pda)
    t2 = perf_counter()
    token_pda = compose_trie_pda(char_pda, vocab)
    t3 = perf_counter()
    constraint = CompiledConstraint("grammar", len(vocab), vocab.fingerprint, token_pda, source=grammar_text)
    constraint.stats.update(states=token_pda.num_states, edges=token_pda.num_edges, char_states=char_pda.num_states)
    if timings is not None:
        timings.update(parse=t1 - t0, optimize_chars=t2 - t1, compose=t3 - t2, optimize_tokens=0.0)
    return constraint


def constraint_from_token_pda(pda: Pda, vocab: Vocabulary, source: str = "") -> CompiledConstraint:
    token_pda = token_pda_from_pda(pda, len(vocab))
    c = CompiledConstraint("grammar", len(vocab), vocab.fingerprint, token_pda, source=source)
    c.stats.update(states=token_pda.num_states, edges=token_pda.num_edges)
    return c


# ---------------------------------------------------------------------------
# per-step contract


def _fsa_mask(c: CompiledConstraint, q: int) -> TokenMask:
    mask = c._mask_cache.get(q)
    if mask is None:
        auto = c.automaton
        bits = np.zeros(c.vocab_size, dtype=bool)
        bits[auto.tokens[auto.offsets[q]:auto.offsets[q + 1]]] = True
        for lab, _ in auto.terminal_edges[q]:
            bits |= c.terminal_masks[lab]
        bits.flags.writeable = False
        mask = TokenMask(bits, bool(auto.finals[q]))
        c._mask_cache[q] = mask
    return mask


def _pda_key(auto: TokenPda, state: DecodeState):
    k = auto.suffix_len[state.state]
    stack = state.stack
    return state.state, stack[len(stack) - k:] if k < len(stack) else stack


def _pda_mask(c: CompiledConstraint, state: DecodeState) -> TokenMask:
    auto = c.automaton
    key = _pda_key(auto, state)
    mask = c._mask_cache.get(key)
    if mask is None:
        bits = np.zeros(c.vocab_size, dtype=bool)
        stack = state.stack
        for g in auto.groups[state.state]:
            if stack_ends_with(stack, g.pops):
                bits[g.tokens] = True
        finish = any(tuple(stack) == pops for pops in auto.accept_pops[state.state])
        bits.flags.writeable = False
        mask = TokenMask(bits, finish)
        c._mask_cache[key] = mask
    return mask


def allowed_tokens(c: CompiledConstraint, state: DecodeState) -> TokenMask:
    """Tokens allowed next, and whether the configuration is accepting."""
    if c.kind == "regex":
        return _fsa_mask(c, state.state)
    return _pda_mask(c, state)


_DENSE_THRESHOLD = 512


def _fsa_lookup(c: CompiledConstraint, q: int):
    table = c._lookup_cache.get(q)
    if table is None:
        auto = c.automaton
        a, b = auto.offsets[q], auto.offsets[q + 1]
        if b - a > _DENSE_THRESHOLD:
            table = np.full(c.vocab_size, -1, dtype=np.int64)
            table[auto.tokens[a:b]] = auto.targets[a:b]
        else:
            table = dict(zip(auto.tokens[a:b].tolist(), auto.targets[a:b].tolist()))
        c._lookup_cache[q] = table
    return table


def try_advance(c: CompiledConstraint, state: DecodeState, token: int) -> DecodeState | None:
    """Like :func:`advance` but returns ``None`` for a disallowed token."""
    if not 0 <= token < c.vocab_size:
        return None
    if c.kind == "regex":
        auto = c.automaton
        q = state.state
        table = _fsa_lookup(c, q)
        if isinstance(table, dict):
            tgt = table.get(token, -1)
        else:
            tgt = int(table[token])
        if tgt < 0:
            for lab, t in auto.terminal_edges[q]:
                if c.terminal_masks[lab][token]:
                    tgt = t
                    break
            else:
                return None
        return DecodeState(tgt, (), state, token, (), state.depth + 1)
    auto = c.automaton
    stack = state.stack
    match = None
    for g in auto.groups[state.state]:
        if not stack_ends_with(stack, g.pops):
            continue
        i = int(np.searchsorted(g.tokens, token))
        if i < len(g.tokens) and g.tokens[i] == token:
            if match is not None:
                raise IntegrityError(f"two edges match token {token} in state {state.state}")
            match = (g, i)
    if match is None:
        return None
    g, i = match
    k = len(g.pops)
    base = stack[: len(stack) - k]
    popped = stack[len(stack) - k:] if k else ()
    pushes = auto.push_table[int(g.push_ids[i])]
    return DecodeState(int(g.targets[i]), base + pushes, state, token, popped, state.depth + 1)


def advance(c: CompiledConstraint, state: DecodeState, token: int) -> DecodeState:
    """Follow the edge matching ``token``; normal edges beat terminal edges."""
    nxt = try_advance(c, state, token)
    if nxt is None:
        raise ConstraintViolation(token, state.state, state.depth)
    return nxt


def advance_all(c: CompiledConstraint, tokens: Sequence[int], state: DecodeState | None = None) -> DecodeState:
    if state is None:
        state = c.initial_state()
    for t in tokens:
        state = advance(c, state, t)
    return state


def first_allowed(c: CompiledConstraint, state: DecodeState) -> int | None:
    """Smallest allowed token id without scanning the whole mask when avoidable."""
    if c.kind == "regex":
        auto = c.automaton
        q = state.state
        best = c._lookup_cache.get(("min", q))
        if best is None:
            a, b = auto.offsets[q], auto.offsets[q + 1]
            best = int(auto.tokens[a:b].min()) if b > a else -1
            c._lookup_cache[("min", q)] = best
        best = None if best < 0 else best
        for lab, _ in auto.terminal_edges[q]:
            key = ("first", lab)
            first = c._lookup_cache.get(key)
            if first is None:
                hits = np.flatnonzero(c.terminal_masks[lab])
                first = int(hits[0]) if len(hits) else -1
                c._lookup_cache[key] = first
            if first >= 0 and (best is None or first < best):
                best = first
        return best
    best = None
    for g in c.automaton.groups[state.state]:
        if len(g.tokens) and stack_ends_with(state.stack, g.pops):
            t = int(g.tokens[0])
            best = t if best is None or t < best else best
    return best


def apply_mask(logits, mask: TokenMask) -> np.ndarray:
    """Set disallowed logits to -inf; the last slot is end-of-sequence."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1 or len(logits) != len(mask.bits) + 1:
        raise PreconditionError(
            f"expected {len(mask.bits) + 1} logits (vocabulary plus end-of-sequence), got {logits.shape}"
        )
    out = np.full(len(logits), -np.inf)
    out[:-1] = np.where(mask.bits, logits[:-1], -np.inf)
    if mask.finish:
        out[-1] = logits[-1]
    return out


class Session:
    """A decoding session that records every mask it hands out.

    The recorded masks let a second scorer (e.g. the target model in
    speculative decoding) apply the same penalties without re-traversing
    the automaton.
    """

    def __init__(self, constraint: CompiledConstraint):
        self.constraint = constraint
        self.state = constraint.initial_state()
        self._masks: list[TokenMask] = []

    def mask(self) -> TokenMask:
        m = allowed_tokens(self.constraint, self.state)
        if len(self._masks) == self.state.depth:
            self._masks.append(m)
        return m

    def advance(self, token: int) -> DecodeState:
        if len(self._masks) == self.state.depth:
            self._masks.append(allowed_tokens(self.constraint, self.state))
        self.state = advance(self.constraint, self.state, token)
        return self.state

    def rewind(self, k: int) -> DecodeState:
        self.state = rewind(self.state, k)
        del self._masks[self.state.depth + 1:]
        return self.state

    @property
    def mask_history(self) -> list[TokenMask]:
        """Mask in force before each step of the current history (and the pending one)."""
        return list(self._masks)

    @property
    def tokens(self) -> list[int]:
        return self.state.tokens
