from __future__ import annotations

import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fstconstrain import Vocabulary, build_detokenizing_fst, compact_trie, fst_transduce, load_vocabulary, save_vocabulary
from fstconstrain.automata import as_symbols
from fstconstrain.detokenizer import VocabTrie
from fstconstrain.errors import PreconditionError, VocabularyError

FOOD_CORE = ["f", "oo", "foo", "for", "food"]

tokens_st = st.lists(st.text(alphabet="abc\n", min_size=1, max_size=6), min_size=1, max_size=50)


def test_chain_construction_shape():
    vocab = Vocabulary.from_strings(FOOD_CORE)
    fst = build_detokenizing_fst(vocab)
    assert fst.initial == 0 and fst.finals == {0}
    closing = [e for e in fst.edges if e[1] is not None]
    assert len(closing) == len(vocab)
    for s, i, o, t in closing:
        assert t == 0 and o == ord(vocab.tokens[i][-1])
    # one chain state per non-final character
    assert fst.num_states == 1 + sum(len(t) - 1 for t in FOOD_CORE)


def test_singleton_vocab():
    fst = build_detokenizing_fst(Vocabulary.from_strings(["a"]))
    assert fst.num_states == 1
    assert fst.edges == ((0, 0, ord("a"), 0),)


def test_food_vocab_compaction():
    vocab = Vocabulary.from_strings(FOOD_CORE)
    trie = compact_trie(build_detokenizing_fst(vocab))
    # root plus the prefixes o, f, fo, foo
    assert trie.num_states == 5
    for k in range(4):
        for x in itertools.product(range(len(vocab)), repeat=k):
            assert fst_transduce(trie, x) == as_symbols(vocab.detokenize(x))


def test_shared_prefix_edges_merge():
    vocab = Vocabulary.from_strings(["foo", "for", "food"])
    chain = build_detokenizing_fst(vocab)
    trie = compact_trie(chain)
    eps_f = lambda f: [e for e in f.edges if e[0] == 0 and e[1] is None and e[2] == ord("f")]  # noqa: E731
    assert len(eps_f(chain)) == 3
    assert len(eps_f(trie)) == 1


def test_no_shared_prefixes_keeps_state_count():
    vocab = Vocabulary.from_strings(["ab", "cd", "e"])
    chain = build_detokenizing_fst(vocab)
    assert compact_trie(chain).num_states == chain.num_states


@given(tokens_st)
def test_compact_invariants(tokens):
    vocab = Vocabulary.from_strings(tokens)
    chain = build_detokenizing_fst(vocab)
    trie = compact_trie(chain)
    assert trie.num_states <= chain.num_states
    assert trie.num_states <= 1 + sum(len(t) for t in tokens)
    assert sum(1 for e in trie.edges if e[1] is not None) == len(vocab)
    for k in range(3):
        for x in itertools.product(range(len(vocab)), repeat=k):
            if k == 2 and x[0] > 6:
                break
            assert fst_transduce(trie, x) == fst_transduce(chain, x)


@given(tokens_st, st.data())
def test_transduction_is_concatenation(tokens, data):
    vocab = Vocabulary.from_strings(tokens)
    fst = compact_trie(build_detokenizing_fst(vocab))
    for _ in range(20):
        x = data.draw(st.lists(st.integers(0, len(tokens) - 1), max_size=8))
        assert fst_transduce(fst, x) == as_symbols("".join(tokens[i] for i in x))


def test_every_sequence_is_in_the_domain():
    vocab = Vocabulary.from_strings(["a", "ab", "b"])
    fst = build_detokenizing_fst(vocab)
    for k in range(5):
        for x in itertools.product(range(3), repeat=k):
            assert fst_transduce(fst, x) is not None


def test_duplicates_get_their_own_closing_edge():
    vocab = Vocabulary.from_strings(["ab", "ab", "a"])
    trie = compact_trie(build_detokenizing_fst(vocab))
    closing = {e[1] for e in trie.edges if e[1] is not None}
    assert closing == {0, 1, 2}
    assert fst_transduce(trie, [1, 0]) == as_symbols("abab")


def test_reserved_ids_are_excluded():
    vocab = Vocabulary(("a", "</s>", "b"), eos_id=1)
    fst = build_detokenizing_fst(vocab)
    assert {e[1] for e in fst.edges if e[1] is not None} == {0, 2}
    assert vocab.detokenize([0, 1, 2]) == "ab"


def test_empty_token_rejected():
    with pytest.raises(PreconditionError):
        build_detokenizing_fst(Vocabulary.from_strings(["a", ""]))


def test_lone_surrogate_needs_byte_mode():
    with pytest.raises(VocabularyError):
        Vocabulary.from_strings(["a", "\ud800"])
    vocab = Vocabulary((b"a", b"\xed\xa0\x80"), byte_mode=True)
    fst = build_detokenizing_fst(vocab)
    assert fst_transduce(fst, [1, 0]) == (0xED, 0xA0, 0x80, ord("a"))


def test_fingerprint_distinguishes_vocabularies():
    a = Vocabulary.from_strings(["a", "b"])
    assert a.fingerprint == Vocabulary.from_strings(["a", "b"]).fingerprint
    assert a.fingerprint != Vocabulary.from_strings(["b", "a"]).fingerprint
    assert a.fingerprint != Vocabulary(("a", "b"), eos_id=1).fingerprint


def test_json_and_tsv_round_trip(tmp_path):
    vocab = Vocabulary.from_strings(["a", "tab\there", "new\nline", "back\\slash", "é"])
    for name in ("v.json", "v.tsv"):
        path = tmp_path / name
        save_vocabulary(vocab, path)
        again = load_vocabulary(path)
        assert again.tokens == vocab.tokens


def test_tsv_c_escapes(tmp_path):
    path = tmp_path / "v.tsv"
    path.write_text("0\ta\\nb\n1\t\\t\n", encoding="utf-8")
    assert load_vocabulary(path).tokens == ("a\nb", "\t")


def test_bad_vocabulary_files(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"a": 1}))
    with pytest.raises(VocabularyError):
        load_vocabulary(bad)
    gap = tmp_path / "gap.tsv"
    gap.write_text("0\ta\n2\tb\n")
    with pytest.raises(VocabularyError):
        load_vocabulary(gap)


def test_trie_arrays():
    vocab = Vocabulary.from_strings(["ab", "a", "b", "abc", "ab"])
    trie = VocabTrie.build(vocab)
    # preorder: a, ab, abc, b
    chars = trie.chars
    assert [chr(chars[s]) for s in trie.pre_sym] == ["a", "b", "c", "b"]
    assert trie.pre_depth.tolist() == [1, 2, 3, 1]
    assert trie.pre_end.tolist() == [3, 3, 3, 4]
    toks = [sorted(trie.pre_tok_ids[trie.pre_tok_start[j]:trie.pre_tok_start[j + 1]].tolist()) for j in range(4)]
    assert toks == [[1], [0, 4], [3], [2]]
    assert isinstance(trie.pre_tok_ids, np.ndarray)
