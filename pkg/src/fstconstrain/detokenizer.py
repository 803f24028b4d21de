"""Vocabularies and the detokenizing transducer.

The transducer maps token ids to the characters they spell. Two forms are
built: the chain form (one cycle through the root per token) and the
compact trie form where chains sharing a prefix share states. A numpy
:class:`VocabTrie` mirrors the trie form for fast composition.
"""

from __future__ import annotations

import codecs
import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._kernels import preorder_layout
from .automata import Fst
from .errors import PreconditionError, VocabularyError


@dataclass(frozen=True)
class Vocabulary:
    """Token strings indexed by id.

    Reserved ids (end/begin of sequence and any extra control ids) have no
    text and never appear in the detokenizing transducer. In byte mode every
    token is a ``bytes`` object and symbols are byte values.
    """

    tokens: tuple
    eos_id: int | None = None
    bos_id: int | None = None
    extra_reserved: frozenset = frozenset()
    byte_mode: bool = False

    def __post_init__(self):
        tokens = tuple(self.tokens)
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "extra_reserved", frozenset(self.extra_reserved))
        n = len(tokens)
        for rid in self.reserved:
            if not 0 <= rid < n:
                raise VocabularyError(f"reserved id {rid} outside 0..{n - 1}")
        want = bytes if self.byte_mode else str
        for i, tok in enumerate(tokens):
            if not isinstance(tok, want):
                raise VocabularyError(f"token {i} is {type(tok).__name__}, expected {want.__name__}")
            if not self.byte_mode and any(0xD800 <= ord(c) <= 0xDFFF for c in tok):
                raise VocabularyError(f"token {i} contains a lone surrogate; use byte mode")

    @classmethod
    def from_strings(cls, tokens: Iterable[str], **kwargs) -> Vocabulary:
        return cls(tuple(tokens), **kwargs)

    def __len__(self) -> int:
        return len(self.tokens)

    def __getitem__(self, token_id: int):
        return self.tokens[token_id]

    @cached_property
    def reserved(self) -> frozenset:
        ids = set(self.extra_reserved)
        for rid in (self.eos_id, self.bos_id):
            if rid is not None:
                ids.add(rid)
        return frozenset(ids)

    @cached_property
    def text_ids(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(self.tokens)) if i not in self.reserved)

    @cached_property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(b"bytes" if self.byte_mode else b"text")
        h.update(json.dumps(sorted(self.reserved)).encode())
        for tok in self.tokens:
            raw = tok if self.byte_mode else tok.encode("utf-8", "surrogatepass")
            h.update(len(raw).to_bytes(4, "little"))
            h.update(raw)
        return h.hexdigest()

    def symbols_of(self, token_id: int) -> tuple[int, ...]:
        tok = self.tokens[token_id]
        return tuple(tok) if self.byte_mode else tuple(ord(c) for c in tok)

    def detokenize(self, ids: Sequence[int]):
        """Concatenate token strings; reserved ids contribute nothing."""
        parts = [self.tokens[i] for i in ids if i not in self.reserved]
        return (b"" if self.byte_mode else "").join(parts)

    def empty_text(self):
        return b"" if self.byte_mode else ""

    @cached_property
    def trie(self) -> VocabTrie:
        return VocabTrie.build(self)

    @cached_property
    def ids_by_string(self) -> dict:
        table: dict = {}
        for i in self.text_ids:
            table.setdefault(self.tokens[i], []).append(i)
        return table


# ---------------------------------------------------------------------------
# file formats


def _unescape_text(s: str) -> str:
    return s.encode("latin-1", "backslashreplace").decode("unicode_escape")


def load_vocabulary(
    path: str | Path,
    fmt: str | None = None,
    eos_id: int | None = None,
    bos_id: int | None = None,
    byte_mode: bool = False,
) -> Vocabulary:
    """Read a JSON array of strings or a two-column ``id<TAB>string`` TSV.

    TSV strings use C-style escapes. In byte mode JSON strings are read as
    Latin-1 so each character stands for one byte.
    """
    path = Path(path)
    if fmt is None:
        fmt = "tsv" if path.suffix.lower() in (".tsv", ".txt") else "json"
    text = path.read_text(encoding="utf-8")
    if fmt == "json":
        data = json.loads(text)
        if not isinstance(data, list) or not all(isinstance(t, str) for t in data):
            raise VocabularyError(f"{path}: expected a JSON array of strings")
        tokens = data
        if byte_mode:
            try:
                tokens = [t.encode("latin-1") for t in data]
            except UnicodeEncodeError as exc:
                raise VocabularyError(f"{path}: byte-mode tokens must be Latin-1 strings") from exc
    elif fmt == "tsv":
        rows = {}
        for lineno, row in enumerate(csv.reader(io.StringIO(text), delimiter="\t", quoting=csv.QUOTE_NONE), 1):
            if not row:
                continue
            if len(row) != 2:
                raise VocabularyError(f"{path}:{lineno}: expected 2 tab-separated columns")
            try:
                idx = int(row[0])
            except ValueError as exc:
                raise VocabularyError(f"{path}:{lineno}: bad id {row[0]!r}") from exc
            if idx in rows:
                raise VocabularyError(f"{path}:{lineno}: duplicate id {idx}")
            if byte_mode:
                rows[idx] = codecs.escape_decode(row[1].encode("latin-1", "backslashreplace"))[0]
            else:
                rows[idx] = _unescape_text(row[1])
        if sorted(rows) != list(range(len(rows))):
            raise VocabularyError(f"{path}: ids must be dense from 0")
        tokens = [rows[i] for i in range(len(rows))]
    else:
        raise VocabularyError(f"unknown vocabulary format {fmt!r}")
    return Vocabulary(tuple(tokens), eos_id=eos_id, bos_id=bos_id, byte_mode=byte_mode)


def save_vocabulary(vocab: Vocabulary, path: str | Path, fmt: str | None = None) -> None:
    path = Path(path)
    if fmt is None:
        fmt = "tsv" if path.suffix.lower() in (".tsv", ".txt") else "json"
    if fmt == "json":
        tokens = [t.decode("latin-1") if vocab.byte_mode else t for t in vocab.tokens]
        path.write_text(json.dumps(tokens, ensure_ascii=False), encoding="utf-8")
        return
    lines = []
    for i, tok in enumerate(vocab.tokens):
        if vocab.byte_mode:
            shown = codecs.escape_encode(tok)[0].decode("latin-1")
        else:
            shown = tok.encode("unicode_escape").decode("ascii")
        lines.append(f"{i}\t{shown}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# transducers


def build_detokenizing_fst(vocab: Vocabulary) -> Fst:
    """Chain-form detokenizer: a cycle through the root for every text token.

    The chain for token ``v`` emits its first ``|v|-1`` symbols on epsilon
    inputs; the edge closing the cycle consumes ``v`` and emits the last one.
    """
    edges = []
    n = 1
    outputs = set()
    for tid in vocab.text_ids:
        syms = vocab.symbols_of(tid)
        if not syms:
            raise PreconditionError(f"token {tid} is empty")
        outputs.update(syms)
        prev = 0
        for sym in syms[:-1]:
            edges.append((prev, None, sym, n))
            prev = n
            n += 1
        edges.append((prev, tid, syms[-1], 0))
    return Fst(n, 0, {0}, edges, frozenset(vocab.text_ids), frozenset(outputs))


def compact_trie(fst: Fst) -> Fst:
    """Merge shared chain prefixes of a chain-form detokenizer into a trie.

    Cycle-closing edges are kept one per token, so duplicate strings at
    distinct ids share the trie path but keep separate closing edges.
    """
    out = fst.out
    chains = []  # (prefix symbols, closing input, closing output)
    stack = [(fst.initial, ())]
    while stack:
        q, prefix = stack.pop()
        for i, o, t in out[q]:
            if i is None:
                if t == fst.initial:
                    raise PreconditionError("epsilon-input edge returns to the root")
                stack.append((t, prefix + (o,)))
            else:
                if t != fst.initial:
                    raise PreconditionError("token edge does not return to the root")
                chains.append((prefix, i, o))
    chains.sort(key=lambda c: (c[0], c[1]))
    node_of = {(): fst.initial}
    edges = []
    n = 1
    for prefix, i, o in chains:
        for k in range(1, len(prefix) + 1):
            key = prefix[:k]
            if key not in node_of:
                node_of[key] = n
                edges.append((node_of[prefix[: k - 1]], None, prefix[k - 1], n))
                n += 1
        edges.append((node_of[prefix], i, o, fst.initial))
    return Fst(n, fst.initial, {fst.initial}, edges, fst.input_alphabet, fst.output_alphabet)


def detokenizing_trie_fst(vocab: Vocabulary) -> Fst:
    return compact_trie(build_detokenizing_fst(vocab))


def with_terminal_passthrough(fst: Fst, labels: Iterable[int]) -> Fst:
    """Add identity root loops so terminal label ids pass through unchanged."""
    labels = sorted(set(labels))
    if not labels:
        return fst
    edges = list(fst.edges) + [(fst.initial, t, t, fst.initial) for t in labels]
    inputs = (fst.input_alphabet or frozenset()) | frozenset(labels)
    outputs = (fst.output_alphabet or frozenset()) | frozenset(labels)
    return Fst(fst.num_states, fst.initial, fst.finals, edges, inputs, outputs)


# ---------------------------------------------------------------------------
# array trie


@dataclass
class VocabTrie:
    """Prefix trie over all text tokens, stored level by level in numpy arrays.

    Node 0 is the root (empty prefix). Nodes are numbered so each level is a
    contiguous id range and children of one parent are contiguous, which
    lets a walk expand a whole level with ``np.repeat``.
    """

    chars: np.ndarray  # sorted distinct symbols, node_char indexes into it
    node_char: np.ndarray
    node_parent: np.ndarray
    level_start: np.ndarray  # level d occupies ids level_start[d]:level_start[d+1]
    child_start: np.ndarray
    child_count: np.ndarray
    tok_start: np.ndarray  # CSR node -> tokens ending exactly at that node
    tok_ids: np.ndarray
    token_node: dict = field(default_factory=dict)
    # the same trie in depth-first preorder (sorted token order), root omitted
    pre_depth: np.ndarray = None
    pre_sym: np.ndarray = None
    pre_end: np.ndarray = None  # one past the last node of each subtree
    pre_tok_start: np.ndarray = None
    pre_tok_ids: np.ndarray = None

    @property
    def num_nodes(self) -> int:
        return len(self.node_char)

    @property
    def depth(self) -> int:
        return len(self.level_start) - 1

    @classmethod
    def build(cls, vocab: Vocabulary) -> VocabTrie:
        ids = np.asarray(vocab.text_ids, dtype=np.int64)
        if vocab.byte_mode:
            raw = [vocab.tokens[i] for i in ids]
            lengths = np.fromiter((len(t) for t in raw), dtype=np.int64, count=len(raw))
            flat = np.frombuffer(b"".join(raw), dtype=np.uint8).astype(np.int64)
        else:
            raw = [vocab.tokens[i] for i in ids]
            lengths = np.fromiter((len(t) for t in raw), dtype=np.int64, count=len(raw))
            flat = np.frombuffer("".join(raw).encode("utf-32-le"), dtype=np.uint32).astype(np.int64)
        if len(ids) and lengths.min() == 0:
            bad = int(ids[np.argmin(lengths)])
            raise PreconditionError(f"token {bad} is empty")
        chars, flat_idx = np.unique(flat, return_inverse=True)
        flat_idx = flat_idx.astype(np.int64)
        offsets = np.zeros(len(ids) + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        k = max(len(chars), 1)
        max_len = int(lengths.max()) if len(ids) else 0

        node_char = [np.zeros(1, dtype=np.int64)]
        node_parent = [np.full(1, -1, dtype=np.int64)]
        level_start = [0, 1]
        cur = np.zeros(len(ids), dtype=np.int64)  # node id of each token's prefix so far
        alive = np.arange(len(ids))
        token_node_arr = np.zeros(len(ids), dtype=np.int64)
        next_id = 1
        for d in range(max_len):
            alive = alive[lengths[alive] > d]
            if not len(alive):
                break
            c = flat_idx[offsets[alive] + d]
            key = cur[alive] * k + c
            uniq, inv = np.unique(key, return_inverse=True)
            node_parent.append(uniq // k)
            node_char.append(uniq % k)
            cur[alive] = next_id + inv
            next_id += len(uniq)
            level_start.append(next_id)
            done = alive[lengths[alive] == d + 1]
            token_node_arr[done] = cur[done]
        node_char_a = np.concatenate(node_char)
        node_parent_a = np.concatenate(node_parent)
        n = len(node_char_a)
        counts = np.bincount(node_parent_a[1:], minlength=n).astype(np.int64)
        child_start = np.zeros(n, dtype=np.int64)
        # children were numbered in (parent, char) order within each level
        first = np.full(n, n, dtype=np.int64)
        kids = np.arange(1, n)
        if n > 1:
            np.minimum.at(first, node_parent_a[1:], kids)
        child_start[:] = np.where(first < n, first, 0)
        order = np.argsort(token_node_arr, kind="stable")
        tok_counts = np.bincount(token_node_arr, minlength=n)
        tok_start = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(tok_counts, out=tok_start[1:])
        tok_ids = ids[order]
        token_node = {int(t): int(nd) for t, nd in zip(ids, token_node_arr)}
        sorted_pos = np.asarray(sorted(range(len(raw)), key=raw.__getitem__), dtype=np.int64)
        pre_depth, pre_sym, pre_end, pre_tok_start = preorder_layout(flat_idx, offsets, sorted_pos)
        return cls(
            pre_depth=pre_depth, pre_sym=pre_sym, pre_end=pre_end,
            pre_tok_start=pre_tok_start, pre_tok_ids=ids[sorted_pos],
            chars=chars, node_char=node_char_a, node_parent=node_parent_a,
            level_start=np.asarray(level_start, dtype=np.int64),
            child_start=child_start, child_count=counts,
            tok_start=tok_start, tok_ids=tok_ids, token_node=token_node,
        )

    def char_index(self) -> dict[int, int]:
        return {int(c): i for i, c in enumerate(self.chars)}

    @cached_property
    def node_has_tokens(self) -> np.ndarray:
        return (self.tok_start[1:] - self.tok_start[:-1]) > 0
