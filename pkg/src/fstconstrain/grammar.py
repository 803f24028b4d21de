"""Context-free grammars compiled to character push-down automata.

Grammar text has one rule per line, ``NAME -> item item ... | item ...``,
where an item is a nonterminal name, a ``/regex/`` terminal or a
``"literal"`` terminal. A line starting with ``|`` adds alternatives to the
rule above it, ``ε`` (or nothing) is the empty sequence, and ``#`` starts a
comment. The left-hand side of the first rule is the start symbol.

Each nonterminal becomes a deterministic automaton over characters plus
``CALL(Y)`` and ``END(rule)`` markers, so rules sharing a prefix are
factored. A call pushes a return address, a stack symbol naming the dotted
rules the caller resumes at; a call in tail position pushes nothing. Ending
a rule pops whatever return address the caller left, or the initial symbol
at top level, which leads to acceptance.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass

from .automata import (
    TERMINAL_BASE,
    EpsilonLoop,
    Fsa,
    Pda,
    epsilon_closure,
    is_terminal_label,
    label_ranges,
    labels_from_ranges,
    minimize,
    remove_pda_epsilons,
    stack_ends_with,
)
from .charset import MAX_CODE_POINT, CharSet, partition
from .errors import DeterminismError, GrammarSyntaxError, RegexSyntaxError
from .regex import compile_regex, escape_literal, parse_regex

CALL_BASE = TERMINAL_BASE + (1 << 20)
END_BASE = TERMINAL_BASE + (1 << 21)


# ---------------------------------------------------------------------------
# grammar model


@dataclass(frozen=True)
class Terminal:
    pattern: str
    text: str = ""  # how the item was written

    def __str__(self) -> str:
        return self.text or f"/{self.pattern}/"


@dataclass(frozen=True)
class NonTerminal:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Rule:
    lhs: str
    rhs: tuple
    line: int = 0

    def __str__(self) -> str:
        return f"{self.lhs} -> " + (" ".join(map(str, self.rhs)) or "ε")


@dataclass(frozen=True)
class DottedRule:
    rule: int
    dot: int

    def render(self, grammar: Grammar) -> str:
        r = grammar.rules[self.rule]
        items = [str(x) for x in r.rhs]
        items.insert(self.dot, "•")
        return f"{r.lhs} -> " + " ".join(items)


@dataclass(frozen=True)
class Grammar:
    rules: tuple
    start: str
    nonterminals: tuple = ()

    def __post_init__(self):
        if not self.rules:
            raise GrammarSyntaxError("grammar has no rules", 1)
        if not self.nonterminals:
            names = tuple(dict.fromkeys(r.lhs for r in self.rules))
            object.__setattr__(self, "nonterminals", names)
        declared = set(self.nonterminals)
        if self.start not in declared:
            raise GrammarSyntaxError(f"start symbol {self.start!r} has no rules", 1)
        for r in self.rules:
            for item in r.rhs:
                if isinstance(item, NonTerminal) and item.name not in declared:
                    raise GrammarSyntaxError(f"undefined nonterminal {item.name!r}", r.line)

    def rules_of(self, name: str) -> list[int]:
        return [i for i, r in enumerate(self.rules) if r.lhs == name]

    @property
    def terminals(self) -> tuple:
        return tuple(dict.fromkeys(x for r in self.rules for x in r.rhs if isinstance(x, Terminal)))

    def __str__(self) -> str:
        return "\n".join(str(r) for r in self.rules)


def _empty_terminals(grammar: Grammar, universe: int) -> set:
    out = set()
    for t in grammar.terminals:
        fsa = _terminal_fsa(t, universe, 0)
        if fsa.initial in fsa.finals:
            out.add(t)
    return out


def nullable_symbols(grammar: Grammar, universe: int = MAX_CODE_POINT) -> set[str]:
    """Nonterminals that derive the empty string."""
    empty_terms = _empty_terminals(grammar, universe)
    nullable: set[str] = set()
    changed = True
    while changed:
        changed = False
        for r in grammar.rules:
            if r.lhs in nullable:
                continue
            if all(x in empty_terms if isinstance(x, Terminal) else x.name in nullable for x in r.rhs):
                nullable.add(r.lhs)
                changed = True
    return nullable


def left_recursive(grammar: Grammar, universe: int = MAX_CODE_POINT) -> list[str]:
    """Nonterminals ``X`` with ``X =>+ X ...`` (through nullable prefixes)."""
    nullable = nullable_symbols(grammar, universe)
    empty_terms = _empty_terminals(grammar, universe)
    calls: dict[str, set[str]] = {x: set() for x in grammar.nonterminals}
    for r in grammar.rules:
        for x in r.rhs:
            if isinstance(x, NonTerminal):
                calls[r.lhs].add(x.name)
                if x.name not in nullable:
                    break
            elif x not in empty_terms:
                break
    out = []
    for x in grammar.nonterminals:
        seen, stack = set(), list(calls[x])
        while stack:
            y = stack.pop()
            if y == x:
                out.append(x)
                break
            if y not in seen:
                seen.add(y)
                stack.extend(calls[y])
    return out


# ---------------------------------------------------------------------------
# parsing


class _Lexer:
    def __init__(self, line: str, number: int):
        self.s = line
        self.i = 0
        self.line = number

    def error(self, msg: str, col: int | None = None):
        raise GrammarSyntaxError(msg, self.line, (self.i if col is None else col) + 1)

    def tokens(self):
        s = self.s
        while True:
            while self.i < len(s) and s[self.i] in " \t\r":
                self.i += 1
            if self.i >= len(s) or s[self.i] == "#":
                return
            c = s[self.i]
            start = self.i
            if s.startswith("->", self.i):
                self.i += 2
                yield "arrow", None, start
            elif c == "|":
                self.i += 1
                yield "bar", None, start
            elif c == "ε":
                self.i += 1
                yield "empty", None, start
            elif c == "/":
                yield "term", self.regex(), start
            elif c == '"':
                yield "term", self.literal(), start
            elif c.isalpha() or c == "_":
                j = self.i
                while j < len(s) and (s[j].isalnum() or s[j] == "_"):
                    j += 1
                self.i = j
                yield "name", s[start:j], start
            else:
                self.error(f"unexpected character {c!r}")

    def regex(self) -> Terminal:
        s = self.s
        start = self.i
        j = self.i + 1
        out = []
        in_class = False
        while j < len(s):
            c = s[j]
            if c == "\\" and j + 1 < len(s):
                out.append("/" if s[j + 1] == "/" else s[j:j + 2])
                j += 2
                continue
            if c == "[" and not in_class:
                in_class = True
            elif c == "]" and in_class:
                in_class = False
            elif c == "/" and not in_class:
                break
            out.append(c)
            j += 1
        else:
            self.error("unterminated /regex/", start)
        pattern = "".join(out)
        try:
            parse_regex(pattern)
        except RegexSyntaxError as e:
            self.error(f"bad terminal: {e}", start + 1 + e.position)
        self.i = j + 1
        return Terminal(pattern, s[start:j + 1])

    def literal(self) -> Terminal:
        s = self.s
        start = self.i
        j = self.i + 1
        while j < len(s) and s[j] != '"':
            j += 2 if s[j] == "\\" else 1
        if j >= len(s):
            self.error("unterminated string literal", start)
        raw = s[start:j + 1]
        try:
            text = json.loads(raw)
        except json.JSONDecodeError as e:
            self.error(f"bad string literal: {e.msg}", start)
        self.i = j + 1
        return Terminal(escape_literal(text), raw)


def parse_grammar(text: str) -> Grammar:
    """Parse grammar text into a :class:`Grammar`; the first rule's left side is the start."""
    rules: list[Rule] = []
    lhs = None
    for number, line in enumerate(text.splitlines(), start=1):
        toks = list(_Lexer(line, number).tokens())
        if not toks:
            continue
        kind, value, col = toks[0]
        if kind == "name":
            if len(toks) < 2 or toks[1][0] != "arrow":
                raise GrammarSyntaxError(f"expected '->' after {value!r}", number, col + len(value) + 1)
            lhs = value
            body = toks[2:]
        elif kind == "bar":
            if lhs is None:
                raise GrammarSyntaxError("'|' continuation before any rule", number, col + 1)
            body = toks
        else:
            raise GrammarSyntaxError("a rule must start with a nonterminal name", number, col + 1)
        alts: list[list] = [[]]
        if body and body[0][0] == "bar" and kind == "bar":
            body = body[1:]
        for k, v, c in body:
            if k == "bar":
                alts.append([])
            elif k == "name":
                alts[-1].append(NonTerminal(v))
            elif k == "term":
                alts[-1].append(v)
            elif k == "empty":
                pass
            else:
                raise GrammarSyntaxError("unexpected '->'", number, c + 1)
        for alt in alts:
            rules.append(Rule(lhs, tuple(alt), number))
    if not rules:
        raise GrammarSyntaxError("grammar has no rules", 1)
    return Grammar(tuple(rules), rules[0].lhs)


# ---------------------------------------------------------------------------
# PDA construction


_TERMINAL_CACHE: dict[tuple[str, int], Fsa] = {}


def _terminal_fsa(term: Terminal, universe: int, line: int) -> Fsa:
    key = (term.pattern, universe)
    fsa = _TERMINAL_CACHE.get(key)
    if fsa is None:
        fsa = minimize(compile_regex(term.pattern, universe))
        if fsa.terminals or any(is_terminal_label(lab) for _, lab, _ in fsa.edges):
            raise GrammarSyntaxError(f"terminal-label extensions are not allowed in grammar terminals: {term}", line)
        _TERMINAL_CACHE[key] = fsa
    return fsa


@dataclass
class _NonterminalAutomaton:
    """Per-nonterminal DFA over characters and call/end markers."""

    name: str
    subsets: list  # DFA state -> frozenset of NFA states
    char_edges: list  # DFA state -> [(label, target)]
    markers: list  # DFA state -> {marker: target}
    dots: dict  # NFA state -> DottedRule for item boundaries

    def dotted(self, d: int) -> list[DottedRule]:
        return sorted({self.dots[q] for q in self.subsets[d] if q in self.dots}, key=lambda x: (x.rule, x.dot))


def _nonterminal_automaton(grammar: Grammar, name: str, index: dict, universe: int) -> _NonterminalAutomaton:
    edges: list = []
    dots: dict[int, DottedRule] = {}
    count = [0]

    def state() -> int:
        count[0] += 1
        return count[0] - 1

    start = state()
    exit_ = state()
    for r in grammar.rules_of(name):
        rule = grammar.rules[r]
        cur = state()
        dots[cur] = DottedRule(r, 0)
        edges.append((start, None, cur))
        for k, item in enumerate(rule.rhs):
            nxt = state()
            dots[nxt] = DottedRule(r, k + 1)
            if isinstance(item, NonTerminal):
                edges.append((cur, CALL_BASE + index[item.name], nxt))
            else:
                fsa = _terminal_fsa(item, universe, rule.line)
                offset = count[0]
                count[0] += fsa.num_states
                edges.extend((s + offset, lab, t + offset) for s, lab, t in fsa.edges)
                edges.append((cur, None, fsa.initial + offset))
                edges.extend((q + offset, None, nxt) for q in fsa.finals)
            cur = nxt
        edges.append((cur, END_BASE + r, exit_))
    nfa = Fsa(count[0], start, {exit_}, edges)
    out = nfa.out

    first = epsilon_closure(nfa, [start])
    index_of = {first: 0}
    subsets = [first]
    char_edges: list = []
    markers: list = []
    queue = deque([first])
    while queue:
        subset = queue.popleft()
        sets, targets = [], []
        marks: dict[int, set] = {}
        for q in subset:
            for label, t in out[q]:
                if label is None:
                    continue
                if isinstance(label, int) and label >= CALL_BASE:
                    marks.setdefault(label, set()).add(t)
                else:
                    sets.append(label_ranges(label))
                    targets.append(t)
        row, mrow = [], {}

        def visit(raw) -> int:
            key = epsilon_closure(nfa, raw)
            if key not in index_of:
                index_of[key] = len(subsets)
                subsets.append(key)
                queue.append(key)
            return index_of[key]

        grouped: dict[frozenset, list] = {}
        for lo, hi, members in partition(sets):
            grouped.setdefault(frozenset(targets[m] for m in members), []).append((lo, hi))
        for raw, ranges in grouped.items():
            tgt = visit(raw)
            for label in labels_from_ranges(ranges):
                row.append((label, tgt))
        for mark, raw in sorted(marks.items()):
            mrow[mark] = visit(raw)
        char_edges.append(row)
        markers.append(mrow)
    return _NonterminalAutomaton(name, subsets, char_edges, markers, dots)


def _is_tail(auto: _NonterminalAutomaton, d: int) -> bool:
    marks = auto.markers[d]
    return not auto.char_edges[d] and len(marks) == 1 and next(iter(marks)) >= END_BASE


def build_grammar_pda(grammar: Grammar, universe: int = MAX_CODE_POINT) -> Pda:
    """Character PDA accepting exactly the grammar's language.

    The PDA still has epsilon edges (calls and returns); determinism is
    checked separately after they are folded away.
    """
    index = {x: i for i, x in enumerate(grammar.nonterminals)}
    autos = {x: _nonterminal_automaton(grammar, x, index, universe) for x in grammar.nonterminals}
    state_id: dict[tuple[str, int], int] = {}
    names: list[str] = []
    for x in grammar.nonterminals:
        auto = autos[x]
        for d in range(len(auto.subsets)):
            state_id[(x, d)] = len(names)
            dotted = auto.dotted(d)
            label = " | ".join(dr.render(grammar) for dr in dotted) if dotted else f"{x} (inside a terminal)"
            names.append(f"{x}:{d} [{label}]")
    accept = len(names)
    names.append("accept")

    initial_symbol = 0
    frames: dict[tuple[str, int], int] = {}
    symbol_names: dict[int, str] = {initial_symbol: f"[{grammar.start}]"}
    edges = []
    returns_to: dict[str, set] = {x: set() for x in grammar.nonterminals}  # frames popped on END
    tail_callers: dict[str, set] = {x: set() for x in grammar.nonterminals}
    returns_to[grammar.start].add(initial_symbol)
    for x in grammar.nonterminals:
        auto = autos[x]
        for d in range(len(auto.subsets)):
            src = state_id[(x, d)]
            for label, t in auto.char_edges[d]:
                edges.append((src, label, (), state_id[(x, t)], ()))
            for mark, t in auto.markers[d].items():
                if mark >= END_BASE:
                    continue
                callee = grammar.nonterminals[mark - CALL_BASE]
                entry = state_id[(callee, 0)]
                if _is_tail(auto, t):
                    tail_callers[callee].add(x)
                    edges.append((src, None, (), entry, ()))
                    continue
                frame = frames.get((x, t))
                if frame is None:
                    frame = frames[(x, t)] = len(frames) + 1
                    dotted = auto.dotted(t)
                    symbol_names[frame] = "[" + " | ".join(dr.render(grammar) for dr in dotted) + "]"
                returns_to[callee].add(frame)
                edges.append((src, None, (), entry, (frame,)))
    changed = True
    while changed:
        changed = False
        for y, callers in tail_callers.items():
            for x in callers:
                extra = returns_to[x] - returns_to[y]
                if extra:
                    returns_to[y] |= extra
                    changed = True
    frame_target = {f: state_id[key] for key, f in frames.items()}
    for x in grammar.nonterminals:
        auto = autos[x]
        for d in range(len(auto.subsets)):
            for mark in auto.markers[d]:
                if mark < END_BASE:
                    continue
                src = state_id[(x, d)]
                for f in sorted(returns_to[x]):
                    tgt = accept if f == initial_symbol else frame_target[f]
                    edges.append((src, None, (f,), tgt, ()))
    symbols = {initial_symbol} | set(frames.values())
    return Pda(
        len(names), state_id[(grammar.start, 0)], {accept}, edges, symbols, initial_symbol,
        None, tuple(names), symbol_names,
    )


# ---------------------------------------------------------------------------
# determinism


@dataclass(frozen=True)
class Conflict:
    """Two edges that can both fire in one configuration."""

    state: int
    state_name: str
    input: str  # the shared input, or "end of input"
    stacks: tuple  # rendered pop sequences of the two edges
    targets: tuple
    example: str | None = None

    def __str__(self) -> str:
        where = f" after {self.example!r}" if self.example is not None else ""
        return (
            f"state {self.state_name}{where}: on {self.input}, edges popping {self.stacks[0]} "
            f"and {self.stacks[1]} both apply (to {self.targets[0]} / {self.targets[1]})"
        )


@dataclass(frozen=True)
class DeterminismReport:
    conflicts: tuple = ()
    loops: tuple = ()  # rendered epsilon loops (left recursion and the like)

    @property
    def ok(self) -> bool:
        return not self.conflicts and not self.loops

    def __str__(self) -> str:
        if self.ok:
            return "deterministic"
        lines = [f"not deterministic: {len(self.conflicts)} conflict(s), {len(self.loops)} epsilon loop(s)"]
        lines += [f"  loop: {lp}" for lp in self.loops]
        lines += [f"  conflict: {c}" for c in self.conflicts]
        return "\n".join(lines)


def _render_loop(pda: Pda, loop: EpsilonLoop) -> str:
    path = " -> ".join(pda.state_name(q) for q in loop.path)
    return f"{loop.kind} at {pda.state_name(loop.state)}: {path}"


def _render_pops(pda: Pda, pops: tuple) -> str:
    return "(" + " ".join(pda.symbol_name(s) for s in pops) + ")" if pops else "()"


def epsilon_free_pda(pda: Pda) -> Pda:
    """Fold calls and returns into consuming edges; only acceptance stays epsilon.

    Raises :class:`DeterminismError` when epsilon loops (left recursion,
    unbounded return chains, empty cycles) make that impossible.
    """
    result, loops = remove_pda_epsilons(pda, strict=False)
    if loops:
        unique = tuple(dict.fromkeys(_render_loop(pda, lp) for lp in loops))
        raise DeterminismError(DeterminismReport((), unique))
    return result


def _compatible(a: tuple, b: tuple) -> bool:
    k = min(len(a), len(b))
    return a[len(a) - k:] == b[len(b) - k:]


def _representative(label) -> int:
    ranges = label_ranges(label)
    for lo, hi in ranges:
        a, b = max(lo, 0x21), min(hi, 0x7E)
        if a <= b:
            return a
    for lo, hi in ranges:
        if lo <= 0x20 <= hi:
            return 0x20
    return ranges[0][0]


def _describe_input(ranges) -> str:
    cs = CharSet(tuple(ranges))
    return f"input {cs.describe()}"


def _find_example(pda: Pda, state: int, pops: tuple, max_configs: int, max_depth: int) -> str | None:
    """Shortest input reaching ``state`` with a stack ending in ``pops``."""
    out = pda.out
    start = (pda.initial, (pda.initial_stack,))
    parent = {start: None}
    queue = deque([start])
    while queue:
        config = queue.popleft()
        q, stack = config
        if q == state and stack_ends_with(stack, pops):
            chars = []
            while parent[config] is not None:
                config, ch = parent[config]
                chars.append(chr(ch))
            return "".join(reversed(chars))
        for label, epops, t, pushes in out[q]:
            if label is None or not stack_ends_with(stack, epops):
                continue
            new_stack = stack[: len(stack) - len(epops)] + pushes
            if len(new_stack) > max_depth:
                continue
            nxt = (t, new_stack)
            if nxt not in parent:
                if len(parent) >= max_configs:
                    return None
                parent[nxt] = (config, _representative(label))
                queue.append(nxt)
    return None


def stack_shapes(pda: Pda) -> tuple[dict[int, set], dict[int, set]]:
    """Over-approximate which symbols can be on top in each state.

    Returns ``(tops, below)``: ``tops[q]`` holds the possible top symbols in
    state ``q`` and ``below[a]`` the symbols that can sit directly under ``a``.
    """
    tops: dict[int, set] = {q: set() for q in pda.states}
    below: dict[int, set] = {a: set() for a in pda.stack_symbols}
    tops[pda.initial].add(pda.initial_stack)
    changed = True
    while changed:
        changed = False
        for src, _, pops, tgt, pushes in pda.edges:
            for top in list(tops[src]):
                if not _feasible(pops, {top}, below):
                    continue
                exposed = below[pops[0]] if pops else {top}
                if pushes:
                    new_tops = {pushes[-1]}
                    for a, b in zip(pushes, pushes[1:]):
                        if a not in below[b]:
                            below[b].add(a)
                            changed = True
                    if not exposed <= below[pushes[0]]:
                        below[pushes[0]] |= exposed
                        changed = True
                else:
                    new_tops = exposed
                if not new_tops <= tops[tgt]:
                    tops[tgt] |= new_tops
                    changed = True
    return tops, below


def _feasible(pops: tuple, tops: set, below: dict) -> bool:
    if not pops:
        return True
    if pops[-1] not in tops:
        return False
    return all(a in below[b] for a, b in zip(pops, pops[1:]))


def check_determinism(pda: Pda, max_configs: int = 50_000, max_depth: int = 64) -> DeterminismReport:
    """Report every pair of edges that may fire together.

    Two consuming edges conflict when their inputs overlap and one pop
    sequence is a suffix of the other; two acceptance edges conflict when
    their pops are compatible. Edges whose pops can never match in their
    state (per :func:`stack_shapes`) are ignored. Each conflict carries the shortest example
    prefix found by a bounded search over concrete configurations.
    """
    if any(label is None and tgt not in pda.finals for _, label, _, tgt, _ in pda.edges):
        try:
            pda = epsilon_free_pda(pda)
        except DeterminismError as e:
            return e.report
    conflicts = []
    tops, below = stack_shapes(pda)
    for q in pda.states:
        edges = [e for e in pda.out[q] if _feasible(e[1], tops[q], below)]
        for i in range(len(edges)):
            la, pa, ta, _ = edges[i]
            for j in range(i + 1, len(edges)):
                lb, pb, tb, _ = edges[j]
                if not _compatible(pa, pb):
                    continue
                if la is None or lb is None:
                    if la is not None or lb is not None:
                        continue
                    what = "end of input"
                else:
                    shared = partition([label_ranges(la), label_ranges(lb)])
                    both = [(lo, hi) for lo, hi, members in shared if len(members) == 2]
                    if not both:
                        continue
                    what = _describe_input(both)
                longer = pa if len(pa) >= len(pb) else pb
                example = _find_example(pda, q, longer, max_configs, max_depth)
                conflicts.append(Conflict(
                    q, pda.state_name(q), what, (_render_pops(pda, pa), _render_pops(pda, pb)),
                    (pda.state_name(ta), pda.state_name(tb)), example,
                ))
    return DeterminismReport(tuple(conflicts), ())


def require_deterministic(pda: Pda) -> None:
    report = check_determinism(pda)
    if not report.ok:
        raise DeterminismError(report)


def compile_grammar_pda(text_or_grammar, universe: int = MAX_CODE_POINT) -> Pda:
    """Parse, build, fold epsilons and check determinism in one go."""
    grammar = parse_grammar(text_or_grammar) if isinstance(text_or_grammar, str) else text_or_grammar
    pda = epsilon_free_pda(build_grammar_pda(grammar, universe))
    require_deterministic(pda)
    return pda


# ---------------------------------------------------------------------------
# sampling and a reference grammar


def _min_heights(grammar: Grammar) -> dict[str, int]:
    inf = float("inf")
    height = {x: inf for x in grammar.nonterminals}
    changed = True
    while changed:
        changed = False
        for r in grammar.rules:
            h = 1 + max((height[x.name] for x in r.rhs if isinstance(x, NonTerminal)), default=0)
            if h < height[r.lhs]:
                height[r.lhs] = h
                changed = True
    return height


def sample_sentence(grammar: Grammar, rng: random.Random, max_depth: int = 8, universe: int = MAX_CODE_POINT) -> str:
    """Random string of the grammar's language from a random derivation.

    Past ``max_depth`` only rules of minimal height are chosen, so the
    derivation always terminates.
    """
    from .schema import sample_from_fsa

    height = _min_heights(grammar)
    rule_height = [
        1 + max((height[x.name] for x in r.rhs if isinstance(x, NonTerminal)), default=0) for r in grammar.rules
    ]
    out: list[str] = []

    def expand(name: str, depth: int):
        options = grammar.rules_of(name)
        if depth >= max_depth:
            best = min(rule_height[i] for i in options)
            options = [i for i in options if rule_height[i] == best]
        rule = grammar.rules[rng.choice(options)]
        for item in rule.rhs:
            if isinstance(item, NonTerminal):
                expand(item.name, depth + 1)
            else:
                out.append(sample_from_fsa(_terminal_fsa(item, universe, rule.line), rng, soft_limit=12))

    expand(grammar.start, 0)
    return "".join(out)


JSON_GRAMMAR = r"""
# JSON values with optional whitespace between tokens
Json -> Ws Value
Value -> Object | Array | String | Number | /true|false|null/ Ws
Object -> "{" Ws ObjectRest
ObjectRest -> "}" Ws | Member MoreMembers "}" Ws
Member -> String ":" Ws Value
MoreMembers -> "," Ws Member MoreMembers | ε
Array -> "[" Ws ArrayRest
ArrayRest -> "]" Ws | Value MoreValues "]" Ws
MoreValues -> "," Ws Value MoreValues | ε
String -> /"(?:[^"\\\x00-\x1f]|\\(?:["\\\/bfnrt]|u[0-9a-fA-F]{4}))*"/ Ws
Number -> /-?(?:0|[1-9][0-9]*)(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?/ Ws
Ws -> /[ \t\n\r]*/
"""


def json_grammar() -> Grammar:
    return parse_grammar(JSON_GRAMMAR)
