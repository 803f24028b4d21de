from __future__ import annotations

import itertools
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ANBN_GRAMMAR, is_anbn
from fstconstrain import compile_regex
from fstconstrain.automata import as_symbols, fsa_accepts, label_matches, pda_accepts, stack_ends_with
from fstconstrain.errors import DeterminismError, GrammarSyntaxError
from fstconstrain.grammar import (
    NonTerminal,
    Terminal,
    build_grammar_pda,
    check_determinism,
    compile_grammar_pda,
    epsilon_free_pda,
    json_grammar,
    nullable_symbols,
    parse_grammar,
    sample_sentence,
)


def _strings(alphabet: str, n: int):
    for k in range(n + 1):
        for t in itertools.product(alphabet, repeat=k):
            yield "".join(t)


# ---------------------------------------------------------------------------
# parsing


def test_parse_anbn():
    g = parse_grammar("S -> /ab/\nS -> /a/ S /b/")
    assert len(g.rules) == 2 and g.start == "S"
    assert g.rules[1].rhs == (Terminal("a", "/a/"), NonTerminal("S"), Terminal("b", "/b/"))


def test_parse_trivial():
    g = parse_grammar("S -> /x/")
    assert len(g.rules) == 1


def test_alternatives_comments_literals_and_epsilon():
    g = parse_grammar('# comment\nS -> "a" T | ε\nT -> /b+/  # trailing\n')
    assert [str(r) for r in g.rules] == ['S -> "a" T', "S -> ε", "T -> /b+/"]
    assert nullable_symbols(g) == {"S"}


def test_json_grammar_size():
    g = json_grammar()
    lines = {r.line for r in g.rules}
    assert 10 <= len(lines) <= 15


@pytest.mark.parametrize("text,fragment,column", [
    ("", "no rules", None),
    ("S -> T", "undefined nonterminal", None),
    ("S -> /a", "unterminated", 6),
    ("S /a/", "expected '->'", 2),
])
def test_parse_errors(text, fragment, column):
    with pytest.raises(GrammarSyntaxError) as info:
        parse_grammar(text)
    assert fragment in str(info.value)
    assert info.value.line == 1
    assert info.value.column == column


# ---------------------------------------------------------------------------
# languages


def test_anbn_examples():
    pda = compile_grammar_pda(ANBN_GRAMMAR)
    assert pda_accepts(pda, as_symbols("ab"))
    assert pda_accepts(pda, as_symbols("aabb"))
    assert not pda_accepts(pda, as_symbols("abb"))


def test_anbn_exhaustive_to_12():
    pda = compile_grammar_pda(ANBN_GRAMMAR)
    for w in _strings("ab", 12):
        assert pda_accepts(pda, as_symbols(w)) == is_anbn(w), w


def test_raw_pda_matches_epsilon_free():
    raw = build_grammar_pda(parse_grammar(ANBN_GRAMMAR))
    free = epsilon_free_pda(raw)
    for w in _strings("ab", 8):
        assert pda_accepts(raw, as_symbols(w)) == pda_accepts(free, as_symbols(w)) == is_anbn(w)


def test_trivial_grammar():
    pda = compile_grammar_pda("S -> /x/")
    for w in ["", "x", "xx", "y"]:
        assert pda_accepts(pda, as_symbols(w)) == (w == "x")


def test_stack_starts_with_start_symbol():
    pda = build_grammar_pda(parse_grammar(ANBN_GRAMMAR))
    assert pda.symbol_name(pda.initial_stack) == "[S]"


def test_epsilon_rules():
    pda = compile_grammar_pda('S -> "(" S ")" S | ε')
    balanced = lambda w: all(w[:i].count("(") >= w[:i].count(")") for i in range(len(w) + 1)) and (  # noqa: E731
        w.count("(") == w.count(")")
    )
    for w in _strings("()", 10):
        assert pda_accepts(pda, as_symbols(w)) == balanced(w), w


REGULAR_PAIRS = [
    ("S -> /a/ S | /b/", "a*b"),
    ("S -> /a/ T\nT -> /b/ S | ε", "(ab)*a"),
    ("S -> /ab/ S | ε", "(ab)*"),
    ("S -> A B\nA -> /a+/\nB -> /b/ | /c/ B", "a+c*b"),
    ("S -> /[ab]/ S | /c/", "[ab]*c"),
]


@pytest.mark.parametrize("grammar,pattern", REGULAR_PAIRS)
def test_regular_grammars_match_regex(grammar, pattern):
    pda = compile_grammar_pda(grammar)
    fsa = compile_regex(pattern)
    for w in _strings("abc", 7):
        assert pda_accepts(pda, as_symbols(w)) == fsa_accepts(fsa, as_symbols(w)), w


# ---------------------------------------------------------------------------
# JSON


def _json_ok(text: str) -> bool:
    try:
        json.loads(text, parse_constant=lambda c: (_ for _ in ()).throw(ValueError(c)))
    except (ValueError, RecursionError):
        return False
    return True


@pytest.fixture(scope="module")
def json_pda():
    return compile_grammar_pda(json_grammar())


def test_json_samples_agree_with_json_parser(json_pda):
    rng = random.Random(11)
    g = json_grammar()
    for _ in range(200):
        s = sample_sentence(g, rng, max_depth=6)
        assert _json_ok(s), s
        assert pda_accepts(json_pda, as_symbols(s)), s


def test_json_mutants_agree_with_json_parser(json_pda):
    rng = random.Random(12)
    g = json_grammar()
    noise = '{}[]",:0123456789.-eE+ tfnrul\\x'
    disagreements = []
    for _ in range(200):
        s = list(sample_sentence(g, rng, max_depth=5))
        op = rng.randrange(3)
        pos = rng.randrange(len(s) + (op == 1))
        if op == 0 and s:
            del s[min(pos, len(s) - 1)]
        elif op == 1:
            s.insert(pos, rng.choice(noise))
        elif s:
            s[min(pos, len(s) - 1)] = rng.choice(noise)
        m = "".join(s)
        if pda_accepts(json_pda, as_symbols(m)) != _json_ok(m):
            disagreements.append(m)
    assert not disagreements


@pytest.mark.parametrize("text,ok", [
    ('{"a": [1, 2.5e3, true, null, "x\\n"]}', True),
    ("[]", True),
    ('  {"k" : {}}\n', True),
    ("[1,]", False),
    ("{'a': 1}", False),
    ("01", False),
    ('"tab\there"', False),
])
def test_json_examples(json_pda, text, ok):
    assert pda_accepts(json_pda, as_symbols(text)) == ok == _json_ok(text)


# ---------------------------------------------------------------------------
# determinism


def test_anbn_is_deterministic():
    assert check_determinism(epsilon_free_pda(build_grammar_pda(parse_grammar(ANBN_GRAMMAR)))).ok


def test_duplicate_rule_conflict():
    with pytest.raises(DeterminismError) as info:
        compile_grammar_pda("S -> /a/\nS -> /a/")
    (c,) = info.value.report.conflicts
    assert c.input == "end of input"
    assert "S -> /a/ •" in c.state_name
    assert c.stacks == ("([S])", "([S])")
    assert c.example == "a"


def test_common_prefix_conflict_names_state_input_and_stack():
    with pytest.raises(DeterminismError) as info:
        compile_grammar_pda("S -> A | B\nA -> /a/ /x/\nB -> /a/ /y/")
    (c,) = info.value.report.conflicts
    assert c.input == "input [a]"
    assert "S -> • A" in c.state_name
    assert set(c.targets) == {"A:1 [A -> /a/ • /x/]", "B:1 [B -> /a/ • /y/]"}
    text = str(info.value.report)
    assert "conflict" in text and "[a]" in text


def test_right_recursive_alternative_is_deterministic():
    # after each a, end of input and another a lead to different edges
    pda = compile_grammar_pda("S -> /a/ S | /a/")
    for w in _strings("a", 6):
        assert pda_accepts(pda, as_symbols(w)) == (len(w) >= 1)


def test_lookahead_conflict_in_sequence():
    with pytest.raises(DeterminismError):
        compile_grammar_pda("S -> A A\nA -> /a/ | /aa/")


def test_left_recursion_reported_as_loop():
    with pytest.raises(DeterminismError) as info:
        compile_grammar_pda("S -> S /a/ | /b/")
    assert any("left-recursion" in lp for lp in info.value.report.loops)


def test_dangling_else_rejected():
    with pytest.raises(DeterminismError):
        compile_grammar_pda('S -> "i" S | "i" S "e" S | "x"')


def test_json_grammar_is_deterministic(json_pda):
    assert check_determinism(json_pda).ok


def _step_configs(pda, text: str):
    """Walk the epsilon-free PDA and return the number of applicable edges seen at each step."""
    config = (pda.initial, (pda.initial_stack,))
    counts = []
    for ch in as_symbols(text):
        q, stack = config
        hits = [
            (t, stack[: len(stack) - len(pops)] + pushes)
            for label, pops, t, pushes in pda.out[q]
            if label is not None and label_matches(label, ch) and stack_ends_with(stack, pops)
        ]
        counts.append(len(hits))
        if not hits:
            break
        config = hits[0]
    return counts


@settings(max_examples=150)
@given(st.text(alphabet='{}[]",:01 tnaelsru', max_size=30))
def test_at_most_one_applicable_edge(json_pda, text):
    assert all(n <= 1 for n in _step_configs(json_pda, text))


@given(st.text(alphabet="ab", max_size=16))
def test_anbn_at_most_one_applicable_edge(text):
    pda = compile_grammar_pda(ANBN_GRAMMAR)
    assert all(n <= 1 for n in _step_configs(pda, text))
