from __future__ import annotations

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fstconstrain import (
    Fsa,
    Fst,
    Vocabulary,
    build_detokenizing_fst,
    compile_regex,
    compose_fst_fsa,
    compose_fst_pda,
    determinize,
    fsa_accepts,
    fst_transduce,
    is_deterministic,
    pda_accepts,
    remove_epsilons,
)
from fstconstrain.automata import (
    as_symbols,
    identity_fst,
    label_ranges,
    minimize,
    remove_pda_epsilons,
    trim,
)
from fstconstrain.charset import CharSet
from fstconstrain.errors import AlphabetMismatchError, IntegrityError, PreconditionError, ResourceLimitError
from fstconstrain.grammar import build_grammar_pda, compile_grammar_pda, parse_grammar

from conftest import ANBN_GRAMMAR, ANBN_TOKENS, is_anbn
from helpers import strings_upto

A, B, X = ord("a"), ord("b"), ord("x")


def ab_fsa() -> Fsa:
    return Fsa(3, 0, {2}, [(0, A, 1), (1, B, 2)])


def odd_a_fsa() -> Fsa:
    return Fsa(2, 0, {1}, [(0, A, 1), (1, A, 0)])


def accepts(fsa, text: str) -> bool:
    return fsa_accepts(fsa, as_symbols(text))


# ---------------------------------------------------------------------------
# acceptance


def test_ab_fsa():
    fsa = ab_fsa()
    assert accepts(fsa, "ab")
    assert not accepts(fsa, "")
    assert not accepts(fsa, "abb")


def test_odd_runs_of_a():
    fsa = odd_a_fsa()
    assert accepts(fsa, "aaa")
    assert not accepts(fsa, "aa")


def test_symbol_outside_alphabet_is_rejection():
    fsa = Fsa(3, 0, {2}, [(0, A, 1), (1, B, 2)], alphabet={A, B})
    assert not accepts(fsa, "ax")


def test_epsilon_edges_consume_nothing():
    fsa = Fsa(3, 0, {2}, [(0, None, 1), (1, A, 2)])
    assert accepts(fsa, "a")
    assert not accepts(fsa, "")


def test_construction_validates_endpoints():
    with pytest.raises(IntegrityError):
        Fsa(2, 0, {3}, [])
    with pytest.raises(IntegrityError):
        Fsa(2, 0, {1}, [(0, A, 5)])


def test_charset_labels():
    fsa = Fsa(2, 0, {1}, [(0, CharSet.range("a", "c"), 1)])
    assert accepts(fsa, "b")
    assert not accepts(fsa, "d")


# ---------------------------------------------------------------------------
# determinization and minimization


def test_a_plus_or_ab_determinizes():
    nfa = Fsa(5, 0, {2, 4}, [(0, A, 1), (1, None, 2), (2, A, 1), (0, A, 3), (3, B, 4)])
    dfa = determinize(nfa)
    assert is_deterministic(dfa)
    for w in strings_upto("ab", 7):
        assert accepts(dfa, w) == (set(w) == {"a"} or w == "ab"), w
    # start, {a}, {aa+}, {ab}: a-runs and "ab" end in distinguishable states
    assert minimize(trim(dfa)).num_states == 4


def test_determinize_idempotent():
    dfa = determinize(odd_a_fsa())
    again = determinize(dfa)
    assert is_deterministic(again)
    for w in strings_upto("a", 9):
        assert accepts(again, w) == accepts(dfa, w)


def test_determinize_cap():
    from fstconstrain.regex import thompson

    # the DFA of (a|b)*a(a|b){12} needs 2^13 states
    with pytest.raises(ResourceLimitError) as info:
        determinize(thompson("(a|b)*a(a|b){12}"), max_states=500)
    assert "500" in str(info.value)


@st.composite
def small_nfas(draw, max_states=8, max_alpha=4):
    n = draw(st.integers(1, max_states))
    k = draw(st.integers(1, max_alpha))
    labels = [None] + list(range(k))
    edges = draw(st.lists(
        st.tuples(st.integers(0, n - 1), st.sampled_from(labels), st.integers(0, n - 1)),
        max_size=3 * n,
    ))
    finals = draw(st.sets(st.integers(0, n - 1)))
    return Fsa(n, 0, finals, edges), k


def _nfa_step(nfa: Fsa, states: frozenset, sym) -> frozenset:
    def close(ss):
        ss = set(ss)
        todo = list(ss)
        while todo:
            q = todo.pop()
            for s, lab, t in nfa.edges:
                if s == q and lab is None and t not in ss:
                    ss.add(t)
                    todo.append(t)
        return frozenset(ss)

    if sym is None:
        return close(states)
    return close({t for s, lab, t in nfa.edges if s in states and lab == sym})


def _bounded_equivalent(nfa: Fsa, dfa: Fsa, k: int, max_len: int) -> bool:
    """Both automata agree on every string of length <= max_len.

    Explores (NFA subset, DFA state) pairs level by level, which covers every
    string without listing them one by one.
    """
    dfa_out = {}
    for s, lab, t in dfa.edges:
        for lo, hi in label_ranges(lab):
            for sym in range(lo, min(hi, k - 1) + 1):
                assert (s, sym) not in dfa_out
                dfa_out[(s, sym)] = t
    level = {(_nfa_step(nfa, frozenset([nfa.initial]), None), dfa.initial)}
    for depth in range(max_len + 1):
        for subset, q in level:
            if bool(subset & nfa.finals) != (q is not None and q in dfa.finals):
                return False
        if depth == max_len:
            break
        nxt = set()
        for subset, q in level:
            for sym in range(k):
                nxt.add((_nfa_step(nfa, subset, sym), None if q is None else dfa_out.get((q, sym))))
        level = nxt
    return True


@given(small_nfas())
def test_determinize_preserves_language(case):
    nfa, k = case
    dfa = determinize(nfa)
    assert is_deterministic(dfa)
    assert _bounded_equivalent(nfa, dfa, k, 10)


@given(small_nfas())
def test_minimize_preserves_language_and_is_minimal(case):
    nfa, k = case
    dfa = trim(determinize(nfa))
    small = minimize(dfa)
    assert is_deterministic(small)
    assert small.num_states <= dfa.num_states
    assert _bounded_equivalent(nfa, small, k, 10)
    assert minimize(small).num_states == small.num_states


def test_minimize_canonical_size():
    # equal languages spelled differently reach the same minimal size
    a = minimize(compile_regex("(ab|ab)*c|(ab)*c"))
    b = minimize(compile_regex("(ab)*c"))
    assert a.num_states == b.num_states == 3


def test_minimize_requires_dfa():
    with pytest.raises(PreconditionError):
        minimize(Fsa(2, 0, {1}, [(0, A, 1), (0, A, 0)]))


@given(small_nfas())
def test_remove_epsilons_preserves_language(case):
    nfa, k = case
    clean = remove_epsilons(nfa)
    assert not any(lab is None for _, lab, _ in clean.edges)
    alphabet = "".join(chr(i) for i in range(k))
    for w in strings_upto(alphabet, 5):
        syms = [ord(c) for c in w]
        assert fsa_accepts(clean, syms) == fsa_accepts(nfa, syms)


def test_trim_drops_dead_and_unreachable():
    fsa = Fsa(5, 0, {2}, [(0, A, 1), (1, B, 2), (0, B, 3), (4, A, 2)])
    small = trim(fsa)
    assert small.num_states == 3
    assert accepts(small, "ab")


# ---------------------------------------------------------------------------
# transducers


def ab_to_x_fst() -> Fst:
    return Fst(3, 0, {2}, [(0, A, None, 1), (1, B, X, 2)])


def test_fst_transduce_ab_to_x():
    assert fst_transduce(ab_to_x_fst(), as_symbols("ab")) == (X,)


def test_fst_outside_domain_is_none():
    assert fst_transduce(ab_to_x_fst(), as_symbols("ba")) is None
    assert fst_transduce(ab_to_x_fst(), ()) is None


def test_fst_two_outputs_is_integrity_error():
    bad = Fst(2, 0, {1}, [(0, A, A, 1), (0, A, B, 1)])
    with pytest.raises(IntegrityError):
        fst_transduce(bad, as_symbols("a"))


def test_detokenizing_fst_on_f_oo(food_vocab):
    fst = build_detokenizing_fst(food_vocab)
    ids = {t: i for i, t in enumerate(food_vocab.tokens)}
    assert fst_transduce(fst, [ids["f"], ids["oo"]]) == as_symbols("foo")


# ---------------------------------------------------------------------------
# composition


def test_compose_food_vocab_with_foo_plus_d(food_vocab):
    fst = build_detokenizing_fst(food_vocab)
    fsa = compile_regex("(foo)+d")
    token_fsa = compose_fst_fsa(fst, fsa)
    for k in range(5):
        for x in itertools.product(range(len(food_vocab)), repeat=k):
            text = food_vocab.detokenize(x)
            want = text.startswith("foo") and text.endswith("d") and set(text[:-1].split("foo")) == {""}
            assert fsa_accepts(token_fsa, x) == want, x
    assert set(token_fsa.symbols()) <= set(range(len(food_vocab)))


def test_compose_identity_fst():
    fsa = compile_regex("a(b|x)*")
    composed = compose_fst_fsa(identity_fst([A, B, X]), fsa)
    for w in strings_upto("abx", 5):
        assert accepts(composed, w) == accepts(fsa, w)


def test_compose_alphabet_mismatch():
    fst = Fst(1, 0, {0}, [(0, 0, A, 0)], output_alphabet={A})
    fsa = Fsa(2, 0, {1}, [(0, B, 1)], alphabet={B})
    with pytest.raises(AlphabetMismatchError):
        compose_fst_fsa(fst, fsa)
    pda = compile_grammar_pda("S -> /b/")
    pda = type(pda)(
        pda.num_states, pda.initial, pda.finals, pda.edges, pda.stack_symbols, pda.initial_stack,
        frozenset({B}),
    )
    with pytest.raises(AlphabetMismatchError):
        compose_fst_pda(fst, pda)


def test_compose_fst_pda_anbn(anbn_vocab):
    fst = build_detokenizing_fst(anbn_vocab)
    pda = build_grammar_pda(parse_grammar(ANBN_GRAMMAR))
    token_pda = compose_fst_pda(fst, pda)
    multi = [e for e in token_pda.edges if len(e[2]) > 1 or len(e[4]) > 1]
    assert multi  # e.g. "aaab" pushes two return addresses at once
    for k in range(7):
        for x in itertools.product(range(len(ANBN_TOKENS)), repeat=k):
            assert pda_accepts(token_pda, x) == is_anbn(anbn_vocab.detokenize(x)), x


def test_compose_identity_fst_pda():
    pda = compile_grammar_pda(ANBN_GRAMMAR)
    composed = compose_fst_pda(identity_fst([A, B]), pda)
    for w in strings_upto("ab", 8):
        assert pda_accepts(composed, as_symbols(w)) == is_anbn(w)


# ---------------------------------------------------------------------------
# push-down automata


def test_anbn_pda():
    pda = build_grammar_pda(parse_grammar(ANBN_GRAMMAR))
    assert pda_accepts(pda, as_symbols("aabb"))
    assert not pda_accepts(pda, as_symbols("aab"))
    assert not pda_accepts(pda, ())


def test_anbn_exhaustive():
    raw = build_grammar_pda(parse_grammar(ANBN_GRAMMAR))
    clean = compile_grammar_pda(ANBN_GRAMMAR)
    for w in strings_upto("ab", 12):
        want = is_anbn(w)
        assert pda_accepts(clean, as_symbols(w)) == want, w
        if len(w) <= 8:
            assert pda_accepts(raw, as_symbols(w)) == want, w


def test_pda_epsilon_removal_multi_symbol_ops():
    pda = build_grammar_pda(parse_grammar(ANBN_GRAMMAR))
    clean, loops = remove_pda_epsilons(pda)
    assert not loops
    assert all(lab is not None or t in clean.finals for _, lab, _, t, _ in clean.edges)


def test_fst_unambiguous_on_random_vocab():
    rng = __import__("random").Random(3)
    toks = sorted({"".join(rng.choice("ab") for _ in range(rng.randint(1, 3))) for _ in range(12)})
    vocab = Vocabulary.from_strings(toks)
    fst = build_detokenizing_fst(vocab)
    for k in range(4):
        for x in itertools.product(range(len(vocab)), repeat=k):
            assert fst_transduce(fst, x) == as_symbols(vocab.detokenize(x))
