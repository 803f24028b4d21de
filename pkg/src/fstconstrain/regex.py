"""Regex dialect: parsing, printing and compilation to character automata.

The dialect covers literals, escapes, character classes, ``.``, groups,
alternation, ``* + ? {m,n}`` and named-group extensions written
``(?P<NAME>argument)``. Matching is always whole-string. Escapes follow
ASCII semantics (``\\d`` is ``[0-9]``, ``\\w`` is ``[A-Za-z0-9_]``,
``\\s`` is ``[ \\t\\n\\r\\f\\v]``) and ``.`` is any character but ``\\n``.

Extensions come in two flavours. Terminal labels (``TEXT_TOKEN``,
``PARAGRAPH_TOKEN``) compile to a single edge whose label stands for a
precomputed set of whole tokens. Sugar (``SUBSTRING_OF``, ``DELIMITED_LIST``,
``DELIMITED_SUBSEQUENCE_OF``, ``QUOTED_TEXT``, ``UNQUOTED_TEXT``,
``TEXT_UNTIL``) expands into an ordinary character automaton.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .automata import DEFAULT_STATE_CAP, TERMINAL_BASE, Fsa, determinize, trim
from .charset import MAX_CODE_POINT, CharSet
from .errors import PreconditionError, RegexSyntaxError
from .mask import TokenMask

# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Empty:
    pass


@dataclass(frozen=True)
class Lit:
    char: int


@dataclass(frozen=True)
class CharClass:
    chars: CharSet
    negated: bool = False

    def resolve(self, universe: int = MAX_CODE_POINT) -> CharSet:
        base = self.chars.negate(universe) if self.negated else self.chars
        return base & CharSet(((0, universe),))


@dataclass(frozen=True)
class Concat:
    items: tuple


@dataclass(frozen=True)
class Alt:
    options: tuple


@dataclass(frozen=True)
class Star:
    node: object


@dataclass(frozen=True)
class Plus:
    node: object


@dataclass(frozen=True)
class Opt:
    node: object


@dataclass(frozen=True)
class Repeat:
    node: object
    min: int
    max: int | None  # None means unbounded

    def __post_init__(self):
        if self.min < 0 or (self.max is not None and self.max < self.min):
            raise ValueError(f"bad repeat bounds {{{self.min},{self.max}}}")


@dataclass(frozen=True)
class Group:
    node: object


@dataclass(frozen=True)
class Extension:
    name: str
    argument: str


RegexAst = Union[Empty, Lit, CharClass, Concat, Alt, Star, Plus, Opt, Repeat, Group, Extension]

TERMINAL_EXTENSIONS = ("TEXT_TOKEN", "PARAGRAPH_TOKEN")
SUGAR_EXTENSIONS = (
    "SUBSTRING_OF",
    "DELIMITED_LIST",
    "DELIMITED_SUBSEQUENCE_OF",
    "QUOTED_TEXT",
    "UNQUOTED_TEXT",
    "TEXT_UNTIL",
)
EXTENSIONS = TERMINAL_EXTENSIONS + SUGAR_EXTENSIONS

DIGIT = CharSet.range("0", "9")
WORD = CharSet(((ord("a"), ord("z")), (ord("A"), ord("Z")), (ord("0"), ord("9")), (ord("_"), ord("_"))))
SPACE = CharSet.of(" \t\n\r\f\v")
NEWLINE = ord("\n")

_CLASS_ESCAPES = {
    "d": (DIGIT, False),
    "D": (DIGIT, True),
    "w": (WORD, False),
    "W": (WORD, True),
    "s": (SPACE, False),
    "S": (SPACE, True),
}
_CHAR_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "f": "\f", "v": "\v", "a": "\a", "0": "\0"}
_META = set(".^$*+?{}[]\\|()")


# ---------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, pattern: str):
        self.p = pattern
        self.i = 0

    def error(self, msg: str, pos: int | None = None):
        raise RegexSyntaxError(msg, self.p, self.i if pos is None else pos)

    def peek(self, k: int = 0) -> str | None:
        j = self.i + k
        return self.p[j] if j < len(self.p) else None

    def parse(self) -> RegexAst:
        node = self.alternation()
        if self.i < len(self.p):
            if self.p[self.i] == ")":
                self.error("unbalanced ')'")
            self.error(f"unexpected {self.p[self.i]!r}")
        return node

    def alternation(self) -> RegexAst:
        options = [self.concatenation()]
        while self.peek() == "|":
            self.i += 1
            options.append(self.concatenation())
        return options[0] if len(options) == 1 else Alt(tuple(options))

    def concatenation(self) -> RegexAst:
        items = []
        while self.i < len(self.p) and self.p[self.i] not in "|)":
            items.append(self.quantified())
        if not items:
            return Empty()
        return items[0] if len(items) == 1 else Concat(tuple(items))

    def quantified(self) -> RegexAst:
        node = self.atom()
        quantified = False
        while True:
            c = self.peek()
            if c in ("*", "+", "?"):
                if quantified:
                    self.error("multiple repeat")
                self.i += 1
                node = {"*": Star, "+": Plus, "?": Opt}[c](node)
            elif c == "{" and self._brace_quantifier() is not None:
                if quantified:
                    self.error("multiple repeat")
                lo, hi, end = self._brace_quantifier()
                if hi is not None and hi < lo:
                    self.error("repeat bounds out of order")
                self.i = end
                node = Repeat(node, lo, hi)
            else:
                break
            quantified = True
            if self.peek() == "?":  # lazy modifier: same language
                self.i += 1
            elif self.peek() == "+":
                self.error("possessive quantifiers are not supported")
        return node

    def _brace_quantifier(self):
        m = re.match(r"\{(\d*)(,(\d*))?\}", self.p[self.i:])
        if not m:
            return None
        lo_s, comma, hi_s = m.group(1), m.group(2), m.group(3)
        if not lo_s and not comma:
            return None
        lo = int(lo_s) if lo_s else 0
        if comma is None:
            hi = lo
        else:
            hi = int(hi_s) if hi_s else None
        return lo, hi, self.i + m.end()

    def atom(self) -> RegexAst:
        c = self.peek()
        if c is None:
            self.error("unexpected end of pattern")
        if c in "*+?":
            self.error("nothing to repeat")
        if c == "{" and self._brace_quantifier() is not None:
            self.error("nothing to repeat")
        if c == "(":
            return self.group()
        if c == "[":
            return self.char_class()
        if c == ".":
            self.i += 1
            return CharClass(CharSet.of([NEWLINE]), negated=True)
        if c == "\\":
            return self.escape()
        if c in "^$":
            self.error("anchors are not supported; patterns always match the whole text")
        self.i += 1
        return Lit(ord(c))

    def group(self) -> RegexAst:
        start = self.i
        self.i += 1
        if self.peek() == "?":
            rest = self.p[self.i:]
            if rest.startswith("?:"):
                self.i += 2
            elif rest.startswith("?P<"):
                end = self.p.find(">", self.i)
                if end < 0:
                    self.error("unterminated group name")
                name = self.p[self.i + 3:end]
                if name == "IMAGE":
                    self.error("the IMAGE extension is not supported", start)
                if name not in EXTENSIONS:
                    self.error(f"unknown extension {name!r}", start)
                self.i = end + 1
                arg = self._raw_argument(start)
                return Extension(name, arg)
            elif rest.startswith("?P="):
                self.error("backreferences are not supported", start)
            elif rest[:2] in ("?=", "?!") or rest[:3] in ("?<=", "?<!"):
                self.error("lookaround is not supported", start)
            else:
                self.error("unsupported group syntax", start)
        inner = self.alternation()
        if self.peek() != ")":
            self.error("missing ')'", start)
        self.i += 1
        return Group(inner)

    def _raw_argument(self, start: int) -> str:
        depth = 1
        j = self.i
        p = self.p
        while j < len(p):
            c = p[j]
            if c == "\\":
                j += 2
                continue
            if c == "[":
                j = _skip_class(p, j)
                continue
            if c == "(":
                depth += 1
            elif c == ")":
                depth -= 1
                if depth == 0:
                    arg = p[self.i:j]
                    self.i = j + 1
                    return arg
            j += 1
        self.error("missing ')' after extension argument", start)

    def char_class(self) -> RegexAst:
        start = self.i
        self.i += 1
        negated = False
        if self.peek() == "^":
            negated = True
            self.i += 1
        parts: list[CharSet] = []
        first = True
        while True:
            c = self.peek()
            if c is None:
                self.error("unterminated character class", start)
            if c == "]" and not first:
                self.i += 1
                break
            first = False
            lo = self._class_atom()
            if isinstance(lo, CharSet):
                parts.append(lo)
                continue
            if self.peek() == "-" and self.peek(1) not in (None, "]"):
                self.i += 1
                hi = self._class_atom()
                if isinstance(hi, CharSet):
                    self.error("bad character range")
                if hi < lo:
                    self.error("bad character range")
                parts.append(CharSet(((lo, hi),)))
            else:
                parts.append(CharSet(((lo, lo),)))
        chars = CharSet(tuple(r for cs in parts for r in cs.ranges))
        return CharClass(chars, negated)

    def _class_atom(self):
        c = self.p[self.i]
        if c != "\\":
            self.i += 1
            return ord(c)
        value = self._escape_value(in_class=True)
        return value

    def escape(self) -> RegexAst:
        value = self._escape_value(in_class=False)
        if isinstance(value, CharSet):
            return CharClass(value)
        return Lit(value)

    def _escape_value(self, in_class: bool):
        start = self.i
        self.i += 1
        c = self.peek()
        if c is None:
            self.error("dangling backslash", start)
        self.i += 1
        if c in _CLASS_ESCAPES:
            base, neg = _CLASS_ESCAPES[c]
            return base.negate() if neg else base
        if c in _CHAR_ESCAPES:
            if c == "0" and self.peek() is not None and self.peek().isdigit():
                self.error("octal escapes are not supported", start)
            return ord(_CHAR_ESCAPES[c])
        if c == "b" and in_class:
            return 8
        if c in "xuU":
            width = {"x": 2, "u": 4, "U": 8}[c]
            digits = self.p[self.i:self.i + width]
            if len(digits) != width or not all(d in "0123456789abcdefABCDEF" for d in digits):
                self.error(f"bad \\{c} escape", start)
            self.i += width
            cp = int(digits, 16)
            if cp > MAX_CODE_POINT:
                self.error("code point out of range", start)
            return cp
        if c.isdigit():
            self.error("backreferences are not supported", start)
        if c.isalpha():
            self.error(f"unsupported escape \\{c}", start)
        return ord(c)


def _skip_class(p: str, j: int) -> int:
    """Index just past the character class starting at ``p[j] == '['``."""
    j += 1
    if j < len(p) and p[j] == "^":
        j += 1
    if j < len(p) and p[j] == "]":
        j += 1
    while j < len(p) and p[j] != "]":
        j += 2 if p[j] == "\\" else 1
    return j + 1


def parse_regex(pattern: str) -> RegexAst:
    """Parse a pattern in the dialect described in the module docstring."""
    return _Parser(pattern).parse()


# ---------------------------------------------------------------------------
# printer


def _show_char(cp: int, in_class: bool = False) -> str:
    ch = chr(cp)
    special = set("\\]^-[") if in_class else _META
    if ch in special:
        return "\\" + ch
    for k, v in _CHAR_ESCAPES.items():
        if ch == v and k != "0":
            return "\\" + k
    if cp == 0:
        return "\\x00"
    if ch.isprintable() and not ch.isspace() or ch == " ":
        return ch
    if cp < 0x100:
        return f"\\x{cp:02x}"
    if cp < 0x10000:
        return f"\\u{cp:04x}"
    return f"\\U{cp:08x}"


def _show_class(node: CharClass) -> str:
    if node.chars == CharSet.of([NEWLINE]) and node.negated:
        return "."
    for key, (base, neg) in _CLASS_ESCAPES.items():
        if not node.negated and node.chars == (base.negate() if neg else base):
            return "\\" + key
    body = []
    for lo, hi in node.chars.ranges:
        if lo == hi:
            body.append(_show_char(lo, True))
        elif hi == lo + 1:
            body.append(_show_char(lo, True) + _show_char(hi, True))
        else:
            body.append(f"{_show_char(lo, True)}-{_show_char(hi, True)}")
    return "[" + ("^" if node.negated else "") + "".join(body) + "]"


def format_regex(node: RegexAst) -> str:
    """Render an AST back to pattern text that parses to the same AST."""
    if isinstance(node, Empty):
        return ""
    if isinstance(node, Lit):
        return _show_char(node.char)
    if isinstance(node, CharClass):
        return _show_class(node)
    if isinstance(node, Group):
        return "(" + format_regex(node.node) + ")"
    if isinstance(node, Extension):
        return f"(?P<{node.name}>{node.argument})"
    if isinstance(node, Alt):
        return "|".join(format_regex(o) for o in node.options)
    if isinstance(node, Concat):
        parts = []
        for item in node.items:
            text = format_regex(item)
            if isinstance(item, (Alt, Concat, Empty)):
                text = "(?:" + text + ")"
            parts.append(text)
        return "".join(parts)
    if isinstance(node, (Star, Plus, Opt, Repeat)):
        inner = node.node
        text = format_regex(inner)
        if isinstance(inner, (Alt, Concat, Empty, Star, Plus, Opt, Repeat)):
            text = "(?:" + text + ")"
        if isinstance(node, Star):
            return text + "*"
        if isinstance(node, Plus):
            return text + "+"
        if isinstance(node, Opt):
            return text + "?"
        if node.max == node.min:
            return f"{text}{{{node.min}}}"
        return f"{text}{{{node.min},{'' if node.max is None else node.max}}}"
    raise TypeError(f"not a regex node: {node!r}")


def strip_groups(node: RegexAst) -> RegexAst:
    """Drop grouping-only wrappers; two patterns with equal stripped trees are equivalent."""
    if isinstance(node, Group):
        return strip_groups(node.node)
    if isinstance(node, Concat):
        items = []
        for it in node.items:
            it = strip_groups(it)
            items.extend(it.items if isinstance(it, Concat) else [it])
        return items[0] if len(items) == 1 else Concat(tuple(items))
    if isinstance(node, Alt):
        opts = []
        for o in node.options:
            o = strip_groups(o)
            opts.extend(o.options if isinstance(o, Alt) else [o])
        return Alt(tuple(opts))
    if isinstance(node, (Star, Plus, Opt)):
        return type(node)(strip_groups(node.node))
    if isinstance(node, Repeat):
        return Repeat(strip_groups(node.node), node.min, node.max)
    return node


# ---------------------------------------------------------------------------
# terminal labels


def _no_newline(symbols: tuple[int, ...]) -> bool:
    return NEWLINE not in symbols


TERMINAL_RULES: dict[str, tuple[str, Callable[[tuple[int, ...]], bool]]] = {
    "TEXT_TOKEN": ("any text token", lambda symbols: True),
    "PARAGRAPH_TOKEN": ("text token containing no newline", _no_newline),
}


@dataclass(frozen=True)
class TerminalLabel:
    """A symbol standing for every token that satisfies ``rule``.

    ``precedence`` is the label's position in declaration order; lower wins
    when several terminal edges match one token.
    """

    id: int
    name: str
    precedence: int

    @property
    def description(self) -> str:
        return TERMINAL_RULES[self.name][0]

    def accepts(self, symbols: tuple[int, ...]) -> bool:
        return TERMINAL_RULES[self.name][1](symbols)


def terminal_mask(label: TerminalLabel, vocab) -> TokenMask:
    """Mask of the vocabulary tokens the label stands for (cached per vocabulary)."""
    cache = vocab.__dict__.setdefault("_terminal_masks", {})
    bits = cache.get(label.name)
    if bits is None:
        bits = np.zeros(len(vocab), dtype=bool)
        ids = np.asarray(vocab.text_ids, dtype=np.int64)
        if label.name == "TEXT_TOKEN":
            bits[ids] = True
        elif label.name == "PARAGRAPH_TOKEN":
            nl = "\n" if not vocab.byte_mode else b"\n"
            flags = np.fromiter((nl not in vocab.tokens[i] for i in ids), dtype=bool, count=len(ids))
            bits[ids[flags]] = True
        else:
            for i in ids:
                bits[i] = label.accepts(vocab.symbols_of(int(i)))
        bits.flags.writeable = False
        cache[label.name] = bits
    return TokenMask(bits, False)


# ---------------------------------------------------------------------------
# Thompson construction


class _Thompson:
    def __init__(self, universe: int, terminals: dict[str, TerminalLabel]):
        self.universe = universe
        self.terminals = terminals
        self.n = 0
        self.edges: list = []

    def state(self) -> int:
        self.n += 1
        return self.n - 1

    def edge(self, s, label, t):
        self.edges.append((s, label, t))

    def build(self, node) -> tuple[int, int]:
        method = getattr(self, "_" + type(node).__name__.lower())
        return method(node)

    def _empty(self, node):
        s = self.state()
        t = self.state()
        self.edge(s, None, t)
        return s, t

    def _lit(self, node):
        s, t = self.state(), self.state()
        if node.char <= self.universe:
            self.edge(s, node.char, t)
        return s, t

    def _charclass(self, node):
        s, t = self.state(), self.state()
        chars = node.resolve(self.universe)
        if chars:
            self.edge(s, chars.ranges[0][0] if chars.is_single() else chars, t)
        return s, t

    def _group(self, node):
        return self.build(node.node)

    def _concat(self, node):
        first = None
        prev_end = None
        for item in node.items:
            s, t = self.build(item)
            if first is None:
                first = s
            else:
                self.edge(prev_end, None, s)
            prev_end = t
        return first, prev_end

    def _alt(self, node):
        s, t = self.state(), self.state()
        for opt in node.options:
            a, b = self.build(opt)
            self.edge(s, None, a)
            self.edge(b, None, t)
        return s, t

    def _star(self, node):
        s, t = self.state(), self.state()
        a, b = self.build(node.node)
        self.edge(s, None, a)
        self.edge(b, None, a)
        self.edge(b, None, t)
        self.edge(s, None, t)
        return s, t

    def _plus(self, node):
        s, t = self.state(), self.state()
        a, b = self.build(node.node)
        self.edge(s, None, a)
        self.edge(b, None, a)
        self.edge(b, None, t)
        return s, t

    def _opt(self, node):
        s, t = self.state(), self.state()
        a, b = self.build(node.node)
        self.edge(s, None, a)
        self.edge(b, None, t)
        self.edge(s, None, t)
        return s, t

    def _repeat(self, node):
        s = self.state()
        cur = s
        for _ in range(node.min):
            a, b = self.build(node.node)
            self.edge(cur, None, a)
            cur = b
        end = self.state()
        if node.max is None:
            a, b = self.build(Star(node.node))
            self.edge(cur, None, a)
            self.edge(b, None, end)
        else:
            self.edge(cur, None, end)
            for _ in range(node.max - node.min):
                a, b = self.build(node.node)
                self.edge(cur, None, a)
                self.edge(b, None, end)
                cur = b
        return s, end

    def _extension(self, node):
        if node.name in TERMINAL_EXTENSIONS:
            if node.argument:
                raise PreconditionError(f"{node.name} takes no argument")
            label = self.terminals.get(node.name)
            if label is None:
                k = len(self.terminals)
                label = TerminalLabel(TERMINAL_BASE + k, node.name, k)
                self.terminals[node.name] = label
            s, t = self.state(), self.state()
            self.edge(s, label.id, t)
            return s, t
        return self.embed(_sugar_fsa(node.name, node.argument, self))

    def embed(self, fsa: Fsa) -> tuple[int, int]:
        offset = self.n
        self.n += fsa.num_states
        for src, label, tgt in fsa.edges:
            self.edge(src + offset, label, tgt + offset)
        s, t = self.state(), self.state()
        self.edge(s, None, fsa.initial + offset)
        for q in fsa.finals:
            self.edge(q + offset, None, t)
        return s, t

    def finish(self, start: int, end: int) -> Fsa:
        terminals = tuple(sorted(self.terminals.values(), key=lambda lab: lab.precedence))
        return Fsa(self.n, start, {end}, self.edges, None, terminals)


def thompson(node: RegexAst | str, universe: int = MAX_CODE_POINT) -> Fsa:
    """Epsilon-NFA for a pattern, with one start and one final state."""
    if isinstance(node, str):
        node = parse_regex(node)
    builder = _Thompson(universe, {})
    start, end = builder.build(node)
    return builder.finish(start, end)


def compile_regex(
    node: RegexAst | str,
    universe: int = MAX_CODE_POINT,
    max_states: int = DEFAULT_STATE_CAP,
) -> Fsa:
    """Deterministic, trimmed character automaton for a pattern.

    Character classes stay as interval labels; terminal extensions appear
    as integer labels at or above ``TERMINAL_BASE`` and are listed in the
    result's ``terminals``.
    """
    nfa = thompson(node, universe)
    return trim(determinize(nfa, max_states=max_states))


# ---------------------------------------------------------------------------
# sugar


def build_substring_fsa(reference: str) -> Fsa:
    """Suffix automaton of ``reference``: accepts every substring, including "".

    It has at most ``2 * len(reference)`` states, all final, and is
    deterministic by construction.
    """
    syms = [ord(c) for c in reference] if isinstance(reference, str) else list(reference)
    link = [-1]
    length = [0]
    trans: list[dict[int, int]] = [{}]
    last = 0
    for c in syms:
        cur = len(length)
        length.append(length[last] + 1)
        link.append(-1)
        trans.append({})
        p = last
        while p != -1 and c not in trans[p]:
            trans[p][c] = cur
            p = link[p]
        if p == -1:
            link[cur] = 0
        else:
            q = trans[p][c]
            if length[p] + 1 == length[q]:
                link[cur] = q
            else:
                clone = len(length)
                length.append(length[p] + 1)
                link.append(link[q])
                trans.append(dict(trans[q]))
                while p != -1 and trans[p].get(c) == q:
                    trans[p][c] = clone
                    p = link[p]
                link[q] = clone
                link[cur] = clone
        last = cur
    edges = [(s, c, t) for s, row in enumerate(trans) for c, t in row.items()]
    n = len(trans)
    return Fsa(n, 0, set(range(n)), edges)


QUOTED_TEXT_PATTERN = r'" *(?:[^\s"\\]|\\["n\\])(?: |[^\s"\\]|\\["n\\])*"'

_YAML_INDICATORS = CharSet.of("-?:,[]{}#&*!|>'\"%@`")
_BLANK = CharSet.of(" \t")
_LINEBREAK = CharSet.of("\n\r")


def unquoted_text_fsa(universe: int = MAX_CODE_POINT) -> Fsa:
    """Conservative plain-scalar matcher.

    No leading indicator or blank, no line breaks, no ``": "`` and no
    ``" #"`` sequences, and no trailing blank or colon.
    """
    everything = CharSet(((0, universe),))
    plain = everything - _LINEBREAK - _BLANK - CharSet.of(":")
    first = everything - _LINEBREAK - _BLANK - _YAML_INDICATORS
    start, word, colon, blank = 0, 1, 2, 3
    edges = [
        (start, first, word),
        (word, plain, word),
        (word, ord(":"), colon),
        (word, _BLANK, blank),
        (colon, ord(":"), colon),
        (colon, plain, word),
        (blank, _BLANK, blank),
        (blank, ord(":"), colon),
        (blank, plain - CharSet.of("#"), word),
    ]
    return Fsa(4, start, {word}, edges)


def text_until_fsa(stop: str, universe: int = MAX_CODE_POINT) -> Fsa:
    """Any text not containing ``stop`` earlier, followed by ``stop``.

    This is the KMP automaton of ``stop``, with the full match as the only
    final state and no edges out of it.
    """
    syms = [ord(c) for c in stop]
    m = len(syms)
    if m == 0:
        return Fsa(1, 0, {0}, [])
    fail = [0] * m
    k = 0
    for i in range(1, m):
        while k and syms[i] != syms[k]:
            k = fail[k - 1]
        if syms[i] == syms[k]:
            k += 1
        fail[i] = k
    everything = CharSet(((0, universe),))
    edges = []
    for state in range(m):
        targets: dict[int, int] = {}
        for c in set(syms):
            j = state
            while j and syms[j] != c:
                j = fail[j - 1]
            targets[c] = j + 1 if syms[j] == c else 0
        for c, t in targets.items():
            if t:
                edges.append((state, c, t))
        rest = everything - CharSet.of(targets)
        zero = CharSet.of([c for c, t in targets.items() if t == 0])
        other = rest | zero
        if other:
            edges.append((state, other, 0))
    return Fsa(m + 1, 0, {m}, edges)


def _unescape_literal(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        c = text[i]
        if c != "\\" or i + 1 == len(text):
            out.append(c)
            i += 1
            continue
        nxt = text[i + 1]
        if nxt in _CHAR_ESCAPES:
            out.append(_CHAR_ESCAPES[nxt])
            i += 2
        elif nxt in "xuU":
            width = {"x": 2, "u": 4, "U": 8}[nxt]
            digits = text[i + 2:i + 2 + width]
            try:
                out.append(chr(int(digits, 16)))
            except ValueError as exc:
                raise PreconditionError(f"bad escape in argument {text!r}") from exc
            i += 2 + width
        else:
            out.append(nxt)
            i += 2
    return "".join(out)


def _split_fields(arg: str) -> list[str]:
    fields, depth, j, start = [], 0, 0, 0
    while j < len(arg):
        c = arg[j]
        if c == "\\":
            j += 2
            continue
        if c == "[":
            j = _skip_class(arg, j)
            continue
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
        elif c == ";" and depth == 0:
            fields.append(arg[start:j])
            start = j + 1
        j += 1
    fields.append(arg[start:])
    return [f for f in fields if f.strip()]


def _literal_fsa(text: str) -> Fsa:
    syms = [ord(c) for c in text]
    return Fsa(len(syms) + 1, 0, {len(syms)}, [(i, c, i + 1) for i, c in enumerate(syms)])


def _delimited_list(arg: str, builder: _Thompson) -> Fsa:
    item = delim = None
    lo, hi = 1, None
    for fld in _split_fields(arg):
        key, sep, value = fld.partition("=")
        key = key.strip()
        if not sep:
            raise PreconditionError(f"DELIMITED_LIST field {fld!r} is not key=value")
        if key == "item":
            item = parse_regex(value)
        elif key == "delim":
            delim = _unescape_literal(value)
        elif key == "min":
            lo = int(value)
        elif key == "max":
            hi = None if value.strip() == "*" else int(value)
        else:
            raise PreconditionError(f"unknown DELIMITED_LIST field {key!r}")
    if item is None or delim is None:
        raise PreconditionError("DELIMITED_LIST needs item=REGEX and delim=STRING")
    if lo < 0 or (hi is not None and hi < lo):
        raise PreconditionError("DELIMITED_LIST bounds must satisfy 0 <= min <= max")
    delim_ast = Concat(tuple(Lit(ord(c)) for c in delim)) if delim else Empty()
    if hi == 0:
        ast = Empty()
    else:
        first = max(lo, 1)
        tail = Repeat(Concat((delim_ast, Group(item))), first - 1, None if hi is None else hi - 1)
        ast = Concat((Group(item), tail))
        if lo == 0:
            ast = Opt(Group(ast))
    return _sub_automaton(ast, builder)


def _delimited_subsequence(arg: str, builder: _Thompson) -> Fsa:
    """Items in order, any subset (required items always present), joined by ``delim``."""
    items: list[tuple[RegexAst, bool]] = []
    delim = None
    for fld in _split_fields(arg):
        key, sep, value = fld.partition("=")
        required = key.endswith("!")
        key = key.rstrip("!").strip()
        if not sep:
            raise PreconditionError(f"DELIMITED_SUBSEQUENCE_OF field {fld!r} is not key=value")
        if key == "item":
            items.append((parse_regex(value), required))
        elif key == "delim" and not required:
            delim = _unescape_literal(value)
        else:
            raise PreconditionError(f"unknown DELIMITED_SUBSEQUENCE_OF field {key!r}")
    if delim is None or not items:
        raise PreconditionError("DELIMITED_SUBSEQUENCE_OF needs item=REGEX fields and delim=STRING")
    # E_i: nothing emitted before item i; N_i: something already emitted.
    sub = _Thompson(builder.universe, builder.terminals)
    n = len(items)
    empty_states = [sub.state() for _ in range(n + 1)]
    some_states = [sub.state() for _ in range(n + 1)]
    for i, (ast, required) in enumerate(items):
        a, b = sub.build(ast)
        sub.edge(empty_states[i], None, a)
        d0, d1 = sub.build(Concat(tuple(Lit(ord(c)) for c in delim)) if delim else Empty())
        sub.edge(some_states[i], None, d0)
        sub.edge(d1, None, a)
        sub.edge(b, None, some_states[i + 1])
        if not required:
            sub.edge(empty_states[i], None, empty_states[i + 1])
            sub.edge(some_states[i], None, some_states[i + 1])
    finals = {some_states[n]}
    if not any(req for _, req in items):
        finals.add(empty_states[n])
    return Fsa(sub.n, empty_states[0], finals, sub.edges)


def _sub_automaton(ast: RegexAst, builder: _Thompson) -> Fsa:
    sub = _Thompson(builder.universe, builder.terminals)
    s, t = sub.build(ast)
    return Fsa(sub.n, s, {t}, sub.edges)


def _sugar_fsa(name: str, arg: str, builder: _Thompson) -> Fsa:
    universe = builder.universe
    if name == "SUBSTRING_OF":
        return build_substring_fsa(_unescape_literal(arg))
    if name == "QUOTED_TEXT":
        if arg:
            raise PreconditionError("QUOTED_TEXT takes no argument")
        return _sub_automaton(parse_regex(QUOTED_TEXT_PATTERN), builder)
    if name == "UNQUOTED_TEXT":
        if arg:
            raise PreconditionError("UNQUOTED_TEXT takes no argument")
        return unquoted_text_fsa(universe)
    if name == "TEXT_UNTIL":
        stop = _unescape_literal(arg)
        if not stop:
            raise PreconditionError("TEXT_UNTIL needs a non-empty stop phrase")
        return text_until_fsa(stop, universe)
    if name == "DELIMITED_LIST":
        return _delimited_list(arg, builder)
    if name == "DELIMITED_SUBSEQUENCE_OF":
        return _delimited_subsequence(arg, builder)
    raise PreconditionError(f"{name} is not a sugar extension")


def expand_sugar(name: str, argument: str = "", universe: int = MAX_CODE_POINT) -> Fsa:
    """Deterministic character automaton for one sugar extension."""
    if name not in SUGAR_EXTENSIONS:
        raise PreconditionError(f"{name!r} is not a sugar extension")
    builder = _Thompson(universe, {})
    fsa = _sugar_fsa(name, argument, builder)
    return trim(determinize(fsa))


def escape_literal(text: str) -> str:
    """Pattern text matching exactly ``text``."""
    return "".join(_show_char(ord(c)) for c in text)


def escape_argument(text: str) -> str:
    """Escape a literal extension argument (e.g. a SUBSTRING_OF reference)."""
    return "".join("\\" + c if c in "\\()[];" else c for c in text)
