"""Finite-state acceptors, transducers and push-down automata.

Symbols are plain integers: Unicode code points (or byte values) for
character automata, vocabulary indices for token automata, and terminal
label ids at or above :data:`TERMINAL_BASE`. An edge label is either
``None`` (epsilon), a single integer, or a :class:`CharSet` of integers.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

from .charset import CharSet, partition
from .errors import AlphabetMismatchError, IntegrityError, PreconditionError, ResourceLimitError

EPSILON = None
TERMINAL_BASE = 1 << 30
DEFAULT_STATE_CAP = 1_000_000

Label = Union[None, int, CharSet]


def is_terminal_label(symbol) -> bool:
    return isinstance(symbol, int) and symbol >= TERMINAL_BASE


def label_ranges(label: Label) -> tuple[tuple[int, int], ...]:
    if label is None:
        return ()
    if isinstance(label, CharSet):
        return label.ranges
    return ((label, label),)


def label_matches(label: Label, symbol: int) -> bool:
    if label is None:
        return False
    if isinstance(label, CharSet):
        return symbol in label
    return label == symbol


def _label_key(label: Label) -> tuple:
    if label is None:
        return (0, 0)
    if isinstance(label, CharSet):
        return (1, label.ranges[0][0] if label.ranges else -1)
    return (1, label)


def labels_from_ranges(ranges: Iterable[tuple[int, int]]) -> list[Label]:
    """Turn merged ranges into edge labels, keeping terminal ids as lone ints."""
    chars: list[tuple[int, int]] = []
    out: list[Label] = []
    for lo, hi in ranges:
        if hi < TERMINAL_BASE:
            chars.append((lo, hi))
            continue
        if lo < TERMINAL_BASE:
            chars.append((lo, TERMINAL_BASE - 1))
            lo = TERMINAL_BASE
        out.extend(range(lo, hi + 1))
    if chars:
        cs = CharSet(tuple(chars))
        out.insert(0, cs.ranges[0][0] if cs.is_single() else cs)
    return out


def _check_states(n, initial, finals, endpoints):
    if not 0 <= initial < n:
        raise IntegrityError(f"initial state {initial} outside 0..{n - 1}")
    for q in finals:
        if not 0 <= q < n:
            raise IntegrityError(f"final state {q} outside 0..{n - 1}")
    for q in endpoints:
        if not 0 <= q < n:
            raise IntegrityError(f"edge endpoint {q} outside 0..{n - 1}")


# ---------------------------------------------------------------------------
# FSA


@dataclass(frozen=True)
class Fsa:
    """An acceptor over integer symbols.

    States are ``0..num_states-1``. ``alphabet`` is optional; when ``None``
    the alphabet is whatever the edge labels mention. ``terminals`` carries
    terminal-label metadata for regex-compiled automata.
    """

    num_states: int
    initial: int
    finals: frozenset
    edges: tuple
    alphabet: frozenset | None = None
    terminals: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "finals", frozenset(self.finals))
        edges = tuple(sorted(self.edges, key=lambda e: (e[0], _label_key(e[1]), e[2])))
        object.__setattr__(self, "edges", edges)
        if self.alphabet is not None:
            object.__setattr__(self, "alphabet", frozenset(self.alphabet))
        _check_states(
            self.num_states, self.initial, self.finals,
            (q for e in edges for q in (e[0], e[2])),
        )

    @property
    def states(self) -> range:
        return range(self.num_states)

    @cached_property
    def out(self) -> list[list[tuple[Label, int]]]:
        table: list[list[tuple[Label, int]]] = [[] for _ in range(self.num_states)]
        for src, label, tgt in self.edges:
            table[src].append((label, tgt))
        return table

    @cached_property
    def has_epsilons(self) -> bool:
        return any(label is None for _, label, _ in self.edges)

    def symbols(self) -> set[int]:
        """Concrete symbols mentioned by integer edge labels."""
        return {label for _, label, _ in self.edges if isinstance(label, int)}

    def __repr__(self) -> str:
        return f"Fsa({self.num_states} states, {len(self.edges)} edges)"


def epsilon_closure(fsa: Fsa, states: Iterable[int]) -> frozenset[int]:
    seen = set(states)
    stack = list(seen)
    out = fsa.out
    while stack:
        q = stack.pop()
        for label, t in out[q]:
            if label is None and t not in seen:
                seen.add(t)
                stack.append(t)
    return frozenset(seen)


def fsa_accepts(fsa: Fsa, symbols: Iterable[int]) -> bool:
    """True iff some path spells ``symbols`` and ends in a final state."""
    current = epsilon_closure(fsa, [fsa.initial])
    out = fsa.out
    for sym in symbols:
        if fsa.alphabet is not None and sym not in fsa.alphabet:
            return False
        nxt = set()
        for q in current:
            for label, t in out[q]:
                if label is not None and label_matches(label, sym):
                    nxt.add(t)
        if not nxt:
            return False
        current = epsilon_closure(fsa, nxt)
    return not current.isdisjoint(fsa.finals)


def remove_epsilons(fsa: Fsa) -> Fsa:
    """Equivalent epsilon-free FSA over the same state numbering, then trimmed."""
    if not fsa.has_epsilons:
        return fsa
    out = fsa.out
    edges = []
    finals = set()
    for q in fsa.states:
        closure = epsilon_closure(fsa, [q])
        if not closure.isdisjoint(fsa.finals):
            finals.add(q)
        seen = set()
        for p in closure:
            for label, t in out[p]:
                if label is not None and (label, t) not in seen:
                    seen.add((label, t))
                    edges.append((q, label, t))
    result = Fsa(fsa.num_states, fsa.initial, finals, edges, fsa.alphabet, fsa.terminals)
    return trim(result, coaccessible=False)


def trim(fsa: Fsa, coaccessible: bool = True) -> Fsa:
    """Drop states unreachable from the initial state (and, optionally, dead states).

    The initial state always survives, so an empty language yields a single
    non-final state with no edges.
    """
    out = fsa.out
    alive = {fsa.initial}
    stack = [fsa.initial]
    while stack:
        q = stack.pop()
        for _, t in out[q]:
            if t not in alive:
                alive.add(t)
                stack.append(t)
    if coaccessible:
        back: dict[int, list[int]] = {}
        for src, _, tgt in fsa.edges:
            back.setdefault(tgt, []).append(src)
        live = set(q for q in fsa.finals if q in alive)
        stack = list(live)
        while stack:
            q = stack.pop()
            for p in back.get(q, ()):
                if p not in live and p in alive:
                    live.add(p)
                    stack.append(p)
        alive = live | {fsa.initial}
    order = sorted(alive)
    remap = {q: i for i, q in enumerate(order)}
    edges = [
        (remap[s], label, remap[t])
        for s, label, t in fsa.edges
        if s in remap and t in remap
    ]
    finals = {remap[q] for q in fsa.finals if q in remap}
    if coaccessible and fsa.initial not in live:
        edges = []
        finals = set()
    return Fsa(len(order), remap[fsa.initial], finals, edges, fsa.alphabet, fsa.terminals)


def is_deterministic(fsa: Fsa) -> bool:
    for q in fsa.states:
        ranges = []
        for label, _ in fsa.out[q]:
            if label is None:
                return False
            ranges.extend(label_ranges(label))
        ranges.sort()
        for (_, hi), (lo, _) in zip(ranges, ranges[1:]):
            if lo <= hi:
                return False
    return True


def determinize(fsa: Fsa, max_states: int = DEFAULT_STATE_CAP) -> Fsa:
    """Subset construction. Overlapping labels are split into disjoint pieces."""
    if fsa.has_epsilons:
        fsa = remove_epsilons(fsa)
    out = fsa.out
    start = frozenset([fsa.initial])
    index = {start: 0}
    subsets = [start]
    edges = []
    queue = deque([start])
    while queue:
        subset = queue.popleft()
        src = index[subset]
        sets, targets = [], []
        for q in subset:
            for label, t in out[q]:
                sets.append(label_ranges(label))
                targets.append(t)
        if not sets:
            continue
        grouped: dict[frozenset, list[tuple[int, int]]] = {}
        for lo, hi, members in partition(sets):
            key = frozenset(targets[m] for m in members)
            grouped.setdefault(key, []).append((lo, hi))
        for key, ranges in grouped.items():
            tgt = index.get(key)
            if tgt is None:
                if len(index) >= max_states:
                    raise ResourceLimitError("determinization state count", max_states)
                tgt = index[key] = len(subsets)
                subsets.append(key)
                queue.append(key)
            for label in labels_from_ranges(ranges):
                edges.append((src, label, tgt))
    finals = {i for i, s in enumerate(subsets) if not s.isdisjoint(fsa.finals)}
    return Fsa(len(subsets), 0, finals, edges, fsa.alphabet, fsa.terminals)


def minimize(fsa: Fsa) -> Fsa:
    """Merge language-equivalent states of a deterministic, trimmed FSA.

    Moore-style refinement over the atoms of the label partition; each
    merged state keeps the labels of one representative, so range edges
    stay compact.
    """
    if not is_deterministic(fsa):
        raise PreconditionError("minimization needs a deterministic automaton")
    n = fsa.num_states
    labels = [label_ranges(label) for _, label, _ in fsa.edges]
    atoms = partition(labels)
    if not atoms:
        return fsa
    starts = [lo for lo, _, _ in atoms]
    sink = n
    table = np.full((n + 1, len(atoms)), sink, dtype=np.int64)
    for (src, _, tgt), ranges in zip(fsa.edges, labels):
        for lo, hi in ranges:
            a = bisect_left(starts, lo)
            b = bisect_right(starts, hi)
            table[src, a:b] = tgt
    block = np.zeros(n + 1, dtype=np.int64)
    block[list(fsa.finals)] = 1
    count = len(np.unique(block))
    while True:
        sig = np.column_stack([block, block[table]])
        _, block = np.unique(sig, axis=0, return_inverse=True)
        block = block.reshape(-1)
        new = int(block.max()) + 1
        if new == count:
            break
        count = new
    if count == n + 1:
        return fsa
    # renumber blocks by first representative, dropping the sink's block
    rep: dict[int, int] = {}
    for q in range(n):
        b = int(block[q])
        if b != block[sink] and b not in rep:
            rep[b] = q
    if int(block[fsa.initial]) not in rep:
        return Fsa(1, 0, set(), [], fsa.alphabet, fsa.terminals)
    order = sorted(rep, key=rep.__getitem__)
    new_id = {b: i for i, b in enumerate(order)}
    edges = []
    out = fsa.out
    for b in order:
        for label, t in out[rep[b]]:
            tb = int(block[t])
            if tb in new_id:
                edges.append((new_id[b], label, new_id[tb]))
    finals = {new_id[int(block[q])] for q in fsa.finals if int(block[q]) in new_id}
    return Fsa(len(order), new_id[int(block[fsa.initial])], finals, edges, fsa.alphabet, fsa.terminals)


# ---------------------------------------------------------------------------
# FST


@dataclass(frozen=True)
class Fst:
    """A transducer; edges are ``(src, input, output, tgt)``."""

    num_states: int
    initial: int
    finals: frozenset
    edges: tuple
    input_alphabet: frozenset | None = None
    output_alphabet: frozenset | None = None

    def __post_init__(self):
        object.__setattr__(self, "finals", frozenset(self.finals))
        edges = tuple(
            sorted(self.edges, key=lambda e: (e[0], _label_key(e[1]), _label_key(e[2]), e[3]))
        )
        object.__setattr__(self, "edges", edges)
        _check_states(
            self.num_states, self.initial, self.finals,
            (q for e in edges for q in (e[0], e[3])),
        )

    @property
    def states(self) -> range:
        return range(self.num_states)

    @cached_property
    def out(self) -> list[list[tuple[Label, Label, int]]]:
        table: list[list[tuple[Label, Label, int]]] = [[] for _ in range(self.num_states)]
        for src, i, o, tgt in self.edges:
            table[src].append((i, o, tgt))
        return table

    @cached_property
    def lookahead(self) -> list[tuple[frozenset, bool, bool]]:
        """Per state: integer inputs reachable over epsilon-input edges, whether
        a set-labelled input is reachable, and whether a final state is."""
        n = self.num_states
        syms: list[set] = [set() for _ in range(n)]
        wild = [False] * n
        fin = [q in self.finals for q in range(n)]
        preds: list[list[int]] = [[] for _ in range(n)]
        for src, i, _, tgt in self.edges:
            if i is None:
                preds[tgt].append(src)
            elif isinstance(i, int):
                syms[src].add(i)
            else:
                wild[src] = True
        work = deque(range(n))
        queued = [True] * n
        while work:
            q = work.popleft()
            queued[q] = False
            for p in preds[q]:
                changed = False
                if not syms[q] <= syms[p]:
                    syms[p] |= syms[q]
                    changed = True
                if wild[q] and not wild[p]:
                    wild[p] = changed = True
                if fin[q] and not fin[p]:
                    fin[p] = changed = True
                if changed and not queued[p]:
                    queued[p] = True
                    work.append(p)
        return [(frozenset(syms[q]), wild[q], fin[q]) for q in range(n)]

    @cached_property
    def step_index(self) -> list[tuple[dict, list, list]]:
        """Per state: edges worth trying by next integer input, edges to try
        for any input, and epsilon-input edges that can still reach a final state."""
        look = self.lookahead
        table: list[tuple[dict, list, list]] = [({}, [], []) for _ in range(self.num_states)]
        for src, i, o, tgt in self.edges:
            by_sym, anything, at_end = table[src]
            edge = (i, o, tgt)
            if i is None:
                syms, wild, fin = look[tgt]
                for sym in syms:
                    by_sym.setdefault(sym, []).append(edge)
                if wild:
                    anything.append(edge)
                if fin:
                    at_end.append(edge)
            elif isinstance(i, int):
                by_sym.setdefault(i, []).append(edge)
            else:
                anything.append(edge)
        return table

    def __repr__(self) -> str:
        return f"Fst({self.num_states} states, {len(self.edges)} edges)"


def identity_fst(symbols: Iterable[int]) -> Fst:
    symbols = sorted(set(symbols))
    edges = [(0, s, s, 0) for s in symbols]
    return Fst(1, 0, {0}, edges, frozenset(symbols), frozenset(symbols))


def fst_transduce(fst: Fst, symbols: Sequence[int], max_configs: int = 1_000_000) -> tuple[int, ...] | None:
    """The output along an accepting path for ``symbols``, or ``None``.

    Raises :class:`IntegrityError` if two accepting paths disagree.
    """
    index = fst.step_index
    look = fst.lookahead
    symbols = list(symbols)
    n = len(symbols)

    def viable(pos, q):
        syms, wild, fin = look[q]
        if pos == n:
            return fin
        return wild or symbols[pos] in syms

    # outputs are interned as (parent id, symbol) so equal ids mean equal outputs
    intern: dict[tuple[int, int], int] = {}
    parents: list[tuple[int, int]] = [(-1, -1)]
    start = (0, fst.initial, 0)
    seen = {start}
    stack = [start]
    results = set()
    while stack:
        pos, q, emitted = stack.pop()
        if pos == n and q in fst.finals:
            results.add(emitted)
            if len(results) > 1:
                raise IntegrityError(f"FST is not functional on input {symbols!r}")
        by_sym, anything, at_end = index[q]
        if pos < n:
            sym = symbols[pos]
            candidates = by_sym.get(sym, ())
            if anything:
                candidates = list(candidates) + anything
        else:
            candidates = at_end
        for i, o, t in candidates:
            if i is None:
                npos = pos
            elif pos < n and label_matches(i, symbols[pos]):
                npos = pos + 1
            else:
                continue
            if o is None:
                nemit = emitted
            elif isinstance(o, int):
                key = (emitted, o)
                nemit = intern.get(key)
                if nemit is None:
                    nemit = intern[key] = len(parents)
                    parents.append(key)
            else:
                raise IntegrityError("FST output labels must be single symbols")
            cfg = (npos, t, nemit)
            if cfg not in seen and viable(npos, t):
                if len(seen) >= max_configs:
                    raise IntegrityError("FST has an epsilon-input cycle with output")
                seen.add(cfg)
                stack.append(cfg)
    if not results:
        return None
    node = next(iter(results))
    chars = []
    while node:
        node, sym = parents[node]
        chars.append(sym)
    return tuple(reversed(chars))


def _check_alphabets(produced: frozenset | None, consumed: frozenset | None):
    if produced is None or consumed is None or not produced or not consumed:
        return
    if produced.isdisjoint(consumed):
        raise AlphabetMismatchError(
            "FST output alphabet shares no symbol with the automaton's input alphabet"
        )


def _fst_output_symbols(fst: Fst) -> frozenset | None:
    if fst.output_alphabet is not None:
        return fst.output_alphabet
    return frozenset(o for _, _, o, _ in fst.edges if isinstance(o, int))


def compose_fst_fsa(fst: Fst, fsa: Fsa) -> Fsa:
    """FSA accepting ``w`` iff ``fsa`` accepts ``fst_transduce(fst, w)``.

    Product states are built lazily from the initial pair and the result is
    trimmed of unreachable and dead states.
    """
    _check_alphabets(_fst_output_symbols(fst), fsa.alphabet or (frozenset(fsa.symbols()) or None))
    fst_out = fst.out
    fsa_out = fsa.out
    start = (fst.initial, fsa.initial)
    index = {start: 0}
    queue = deque([start])
    edges = []

    def visit(pair):
        idx = index.get(pair)
        if idx is None:
            idx = index[pair] = len(index)
            queue.append(pair)
        return idx

    while queue:
        pair = queue.popleft()
        t, a = pair
        src = index[pair]
        for label, tgt in fsa_out[a]:
            if label is None:
                edges.append((src, None, visit((t, tgt))))
        for i, o, t2 in fst_out[t]:
            if o is None:
                edges.append((src, i, visit((t2, a))))
                continue
            for label, a2 in fsa_out[a]:
                if label is not None and label_matches(label, o):
                    edges.append((src, i, visit((t2, a2))))
    finals = {idx for (t, a), idx in index.items() if t in fst.finals and a in fsa.finals}
    result = Fsa(len(index), 0, finals, edges, fst.input_alphabet, fsa.terminals)
    return trim(result)


# ---------------------------------------------------------------------------
# PDA


@dataclass(frozen=True)
class Pda:
    """A push-down automaton; edges are ``(src, input, pops, tgt, pushes)``.

    ``pops`` and ``pushes`` are tuples of stack symbols written bottom to top:
    an edge applies when the stack ends with ``pops``. Stack symbols are
    integers; ``initial_stack`` is the symbol the stack starts with.
    """

    num_states: int
    initial: int
    finals: frozenset
    edges: tuple
    stack_symbols: frozenset
    initial_stack: int = 0
    alphabet: frozenset | None = None
    state_names: tuple = field(default=(), compare=False)
    symbol_names: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "finals", frozenset(self.finals))
        object.__setattr__(self, "stack_symbols", frozenset(self.stack_symbols))
        edges = tuple(
            sorted(
                self.edges,
                key=lambda e: (e[0], _label_key(e[1]), e[2], e[3], e[4]),
            )
        )
        object.__setattr__(self, "edges", edges)
        _check_states(
            self.num_states, self.initial, self.finals,
            (q for e in edges for q in (e[0], e[3])),
        )
        if self.initial_stack not in self.stack_symbols:
            raise IntegrityError("initial stack symbol missing from the stack alphabet")
        for e in edges:
            for sym in e[2] + e[4]:
                if sym not in self.stack_symbols:
                    raise IntegrityError(f"stack symbol {sym!r} not declared")

    @property
    def states(self) -> range:
        return range(self.num_states)

    @cached_property
    def out(self) -> list[list[tuple]]:
        table: list[list[tuple]] = [[] for _ in range(self.num_states)]
        for src, label, pops, tgt, pushes in self.edges:
            table[src].append((label, pops, tgt, pushes))
        return table

    def symbol_name(self, sym) -> str:
        if sym == self.initial_stack and sym not in self.symbol_names:
            return "[•]"
        return self.symbol_names.get(sym, str(sym))

    def state_name(self, q: int) -> str:
        if q < len(self.state_names):
            return self.state_names[q]
        return str(q)

    def __repr__(self) -> str:
        return f"Pda({self.num_states} states, {len(self.edges)} edges)"


def stack_ends_with(stack: Sequence, pops: Sequence) -> bool:
    k = len(pops)
    if k == 0:
        return True
    if k > len(stack):
        return False
    return tuple(stack[len(stack) - k:]) == tuple(pops)


def pda_accepts(pda: Pda, symbols: Iterable[int], max_depth: int | None = None) -> bool:
    """Run a PDA from ``(initial, [initial_stack])``.

    Epsilon edges are followed on the concrete stack. If two distinct
    configurations can consume the same input symbol the automaton is not
    deterministic and :class:`IntegrityError` is raised.
    """
    symbols = list(symbols)
    if max_depth is None:
        max_depth = 4 * (len(symbols) + 2) * (pda.num_states + 1)
    out = pda.out

    def closure(configs):
        seen = set(configs)
        stack = list(configs)
        while stack:
            q, st = stack.pop()
            for label, pops, t, pushes in out[q]:
                if label is not None or not stack_ends_with(st, pops):
                    continue
                nst = st[: len(st) - len(pops)] + pushes
                if len(nst) > max_depth:
                    continue
                cfg = (t, nst)
                if cfg not in seen:
                    seen.add(cfg)
                    stack.append(cfg)
        return seen

    current = closure({(pda.initial, (pda.initial_stack,))})
    for sym in symbols:
        if pda.alphabet is not None and sym not in pda.alphabet:
            return False
        moves = set()
        for q, st in current:
            for label, pops, t, pushes in out[q]:
                if label is None or not label_matches(label, sym):
                    continue
                if stack_ends_with(st, pops):
                    moves.add((t, st[: len(st) - len(pops)] + pushes))
        if len(moves) > 1:
            raise IntegrityError(f"non-deterministic move on symbol {sym!r}")
        if not moves:
            return False
        current = closure(moves)
    return any(q in pda.finals for q, _ in current)


def combine_stack_ops(pops1: tuple, pushes1: tuple, pops2: tuple, pushes2: tuple):
    """Net effect of applying ``(pops1, pushes1)`` then ``(pops2, pushes2)``.

    Returns ``None`` when the second pop contradicts the first push.
    """
    k = min(len(pops2), len(pushes1))
    if k and pushes1[len(pushes1) - k:] != pops2[len(pops2) - k:]:
        return None
    pops = pops2[: len(pops2) - k] + pops1
    pushes = pushes1[: len(pushes1) - k] + pushes2
    return pops, pushes


@dataclass
class EpsilonLoop:
    """A cycle met while eliminating epsilon edges."""

    kind: str  # "left-recursion", "return-chain" or "cycle"
    state: int
    path: tuple


class PdaLoopError(IntegrityError):
    def __init__(self, loops: list[EpsilonLoop]):
        kinds = ", ".join(sorted({lp.kind for lp in loops}))
        super().__init__(f"epsilon loops prevent epsilon removal: {kinds}")
        self.loops = loops


def remove_pda_epsilons(pda: Pda, strict: bool = True) -> tuple[Pda, list[EpsilonLoop]]:
    """Fold epsilon paths into consuming edges with multi-symbol pops/pushes.

    Each surviving edge is an epsilon path followed by one consuming edge.
    Epsilon paths that reach a final state become epsilon edges into that
    final state, so acceptance is still "end in a final state". Epsilon
    paths are enumerated individually, so two derivations reaching the same
    consuming edge produce two (identical) edges; callers use that to detect
    ambiguity.
    """
    out = pda.out
    entries = [pda.initial]
    seen_entries = {pda.initial}
    for _, label, _, tgt, _ in pda.edges:
        if label is not None and tgt not in seen_entries:
            seen_entries.add(tgt)
            entries.append(tgt)
    edges = []
    loops: list[EpsilonLoop] = []
    final_targets = set()
    for entry in entries:
        # path holds (state, len(pops), len(pushes)) of the states on the current path
        work = [(entry, (), (), ((entry, 0, 0),))]
        while work:
            q, pops, pushes, path = work.pop()
            if q in pda.finals and q != entry:
                edges.append((entry, None, pops, q, pushes))
                final_targets.add(q)
            for label, epops, t, epushes in out[q]:
                comb = combine_stack_ops(pops, pushes, epops, epushes)
                if comb is None:
                    continue
                npops, npushes = comb
                if label is not None:
                    edges.append((entry, label, npops, t, npushes))
                    continue
                prior = [p for p in path if p[0] == t]
                if prior:
                    _, plen, ulen = prior[-1]
                    if len(npushes) > ulen:
                        kind = "left-recursion"
                    elif len(npops) > plen:
                        kind = "return-chain"
                    else:
                        kind = "cycle"
                    loops.append(EpsilonLoop(kind, t, tuple(p[0] for p in path) + (t,)))
                    continue
                work.append((t, npops, npushes, path + ((t, len(npops), len(npushes)),)))
    if loops and strict:
        raise PdaLoopError(loops)
    keep = sorted(seen_entries | final_targets)
    remap = {q: i for i, q in enumerate(keep)}
    new_edges = [(remap[s], lab, p, remap[t], u) for s, lab, p, t, u in edges if t in remap]
    finals = {remap[q] for q in pda.finals if q in remap}
    names = tuple(pda.state_name(q) for q in keep) if pda.state_names else ()
    result = Pda(
        len(keep), remap[pda.initial], finals, new_edges, pda.stack_symbols,
        pda.initial_stack, pda.alphabet, names, dict(pda.symbol_names),
    )
    return result, loops


def compose_fst_pda(fst: Fst, pda: Pda) -> Pda:
    """PDA accepting ``w`` iff ``pda`` accepts ``fst_transduce(fst, w)``.

    The product is epsilon-eliminated, so a composed edge consuming one
    input symbol may pop and push several stack symbols.
    """
    _check_alphabets(_fst_output_symbols(fst), pda.alphabet)
    fst_out = fst.out
    pda_out = pda.out
    start = (fst.initial, pda.initial)
    index = {start: 0}
    queue = deque([start])
    edges = []

    def visit(pair):
        idx = index.get(pair)
        if idx is None:
            idx = index[pair] = len(index)
            queue.append(pair)
        return idx

    while queue:
        pair = queue.popleft()
        t, s = pair
        src = index[pair]
        for label, pops, s2, pushes in pda_out[s]:
            if label is None:
                edges.append((src, None, pops, visit((t, s2)), pushes))
        for i, o, t2 in fst_out[t]:
            if o is None:
                edges.append((src, i, (), visit((t2, s)), ()))
                continue
            for label, pops, s2, pushes in pda_out[s]:
                if label is not None and label_matches(label, o):
                    edges.append((src, i, pops, visit((t2, s2)), pushes))
    finals = {idx for (t, s), idx in index.items() if t in fst.finals and s in pda.finals}
    names = tuple(
        f"({t},{pda.state_name(s)})" for (t, s) in sorted(index, key=index.get)
    )
    product = Pda(
        len(index), 0, finals, edges, pda.stack_symbols, pda.initial_stack,
        fst.input_alphabet, names, dict(pda.symbol_names),
    )
    result, _ = remove_pda_epsilons(product)
    return _dedupe_pda(result)


def _dedupe_pda(pda: Pda) -> Pda:
    edges = list(dict.fromkeys(pda.edges))
    return Pda(
        pda.num_states, pda.initial, pda.finals, edges, pda.stack_symbols,
        pda.initial_stack, pda.alphabet, pda.state_names, dict(pda.symbol_names),
    )


def as_symbols(text) -> tuple[int, ...]:
    """Code points of a ``str`` or byte values of a ``bytes`` object."""
    if isinstance(text, (bytes, bytearray)):
        return tuple(text)
    return tuple(ord(c) for c in text)

