"""Binary container for automata and compiled constraints, plus a readable text dump.

Layout: 4 magic bytes, a little-endian ``u16`` format version, a ``u32``
header length, a UTF-8 JSON header, then raw little-endian arrays whose
names, dtypes, shapes and offsets the header lists. Labels live in an
alphabet table in the header (``null`` for epsilon, an integer, or a list
of closed code-point ranges) and edge arrays index into it.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .automata import Fsa, Fst, Pda, is_terminal_label
from .charset import CharSet
from .detokenizer import Vocabulary
from .engine import CompiledConstraint, PdaGroup, TokenFsa, TokenPda
from .errors import FstConstrainError, VocabularyMismatch
from .regex import TerminalLabel

MAGIC = b"FSTK"
VERSION = 1
_PREFIX = struct.Struct("<4sHI")


class ContainerError(FstConstrainError):
    """The bytes are not a readable container."""


# ---------------------------------------------------------------------------
# container


@dataclass
class _Writer:
    kind: str
    meta: dict = field(default_factory=dict)
    labels: list = field(default_factory=list)
    _label_index: dict = field(default_factory=dict)
    _arrays: list = field(default_factory=list)

    def label(self, label) -> int:
        key = (type(label).__name__, label.ranges if isinstance(label, CharSet) else label)
        idx = self._label_index.get(key)
        if idx is None:
            idx = len(self.labels)
            self._label_index[key] = idx
            if isinstance(label, CharSet):
                self.labels.append([list(r) for r in label.ranges])
            else:
                self.labels.append(label)
        return idx

    def array(self, name: str, values, dtype) -> None:
        self._arrays.append((name, np.ascontiguousarray(values, dtype=np.dtype(dtype).newbyteorder("<"))))

    def ragged(self, name: str, rows, dtype="<i8") -> None:
        lengths = [len(r) for r in rows]
        offsets = np.zeros(len(rows) + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        self.array(name + ".offsets", offsets, "<i8")
        self.array(name + ".values", [x for r in rows for x in r], dtype)

    def to_bytes(self) -> bytes:
        entries, blobs, pos = [], [], 0
        for name, arr in self._arrays:
            raw = arr.tobytes()
            entries.append({
                "name": name, "dtype": arr.dtype.str, "shape": list(arr.shape),
                "offset": pos, "nbytes": len(raw),
            })
            blobs.append(raw)
            pos += len(raw)
        header = {"kind": self.kind, "meta": self.meta, "alphabet": self.labels, "arrays": entries}
        head = json.dumps(header, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
        return _PREFIX.pack(MAGIC, VERSION, len(head)) + head + b"".join(blobs)


@dataclass
class _Reader:
    kind: str
    meta: dict
    alphabet: list
    arrays: dict

    @classmethod
    def parse(cls, data: bytes) -> _Reader:
        if len(data) < _PREFIX.size:
            raise ContainerError("truncated container")
        magic, version, head_len = _PREFIX.unpack_from(data)
        if magic != MAGIC:
            raise ContainerError(f"bad magic bytes {magic!r}")
        if version != VERSION:
            raise ContainerError(f"unsupported container version {version}")
        start = _PREFIX.size
        try:
            header = json.loads(data[start:start + head_len].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ContainerError("corrupt container header") from exc
        body = start + head_len
        arrays = {}
        for e in header["arrays"]:
            a = body + e["offset"]
            raw = data[a:a + e["nbytes"]]
            if len(raw) != e["nbytes"]:
                raise ContainerError(f"array {e['name']!r} is truncated")
            arrays[e["name"]] = np.frombuffer(raw, dtype=np.dtype(e["dtype"])).reshape(e["shape"])
        return cls(header["kind"], header["meta"], header["alphabet"], arrays)

    def label(self, idx: int):
        entry = self.alphabet[int(idx)]
        if isinstance(entry, list):
            return CharSet(tuple((lo, hi) for lo, hi in entry))
        return entry

    def ragged(self, name: str) -> list[tuple]:
        offsets = self.arrays[name + ".offsets"].tolist()
        values = self.arrays[name + ".values"].tolist()
        return [tuple(values[offsets[i]:offsets[i + 1]]) for i in range(len(offsets) - 1)]


def _alphabet_meta(alphabet) -> list | None:
    return None if alphabet is None else sorted(alphabet)


def _alphabet_load(value):
    return None if value is None else frozenset(value)


# ---------------------------------------------------------------------------
# automata


def automaton_to_bytes(auto: Fsa | Fst | Pda) -> bytes:
    if isinstance(auto, Fsa):
        w = _Writer("fsa", {
            "num_states": auto.num_states, "initial": auto.initial, "finals": sorted(auto.finals),
            "alphabet": _alphabet_meta(auto.alphabet),
            "terminals": [[t.id, t.name, t.precedence] for t in auto.terminals],
        })
        w.array("src", [e[0] for e in auto.edges], "<i8")
        w.array("label", [w.label(e[1]) for e in auto.edges], "<i8")
        w.array("tgt", [e[2] for e in auto.edges], "<i8")
        return w.to_bytes()
    if isinstance(auto, Fst):
        w = _Writer("fst", {
            "num_states": auto.num_states, "initial": auto.initial, "finals": sorted(auto.finals),
            "input_alphabet": _alphabet_meta(auto.input_alphabet),
            "output_alphabet": _alphabet_meta(auto.output_alphabet),
        })
        w.array("src", [e[0] for e in auto.edges], "<i8")
        w.array("input", [w.label(e[1]) for e in auto.edges], "<i8")
        w.array("output", [w.label(e[2]) for e in auto.edges], "<i8")
        w.array("tgt", [e[3] for e in auto.edges], "<i8")
        return w.to_bytes()
    if isinstance(auto, Pda):
        w = _Writer("pda", {
            "num_states": auto.num_states, "initial": auto.initial, "finals": sorted(auto.finals),
            "stack_symbols": sorted(auto.stack_symbols), "initial_stack": auto.initial_stack,
            "alphabet": _alphabet_meta(auto.alphabet), "state_names": list(auto.state_names),
            "symbol_names": {str(k): v for k, v in auto.symbol_names.items()},
        })
        w.array("src", [e[0] for e in auto.edges], "<i8")
        w.array("label", [w.label(e[1]) for e in auto.edges], "<i8")
        w.ragged("pops", [e[2] for e in auto.edges])
        w.array("tgt", [e[3] for e in auto.edges], "<i8")
        w.ragged("pushes", [e[4] for e in auto.edges])
        return w.to_bytes()
    raise TypeError(f"cannot serialize {type(auto).__name__}")


def automaton_from_bytes(data: bytes) -> Fsa | Fst | Pda:
    r = _Reader.parse(data)
    m = r.meta
    a = {k: v.tolist() for k, v in r.arrays.items() if not k.endswith((".offsets", ".values"))}
    if r.kind == "fsa":
        terms = tuple(TerminalLabel(*t) for t in m["terminals"])
        edges = [(s, r.label(l), t) for s, l, t in zip(a["src"], a["label"], a["tgt"])]
        return Fsa(m["num_states"], m["initial"], m["finals"], edges, _alphabet_load(m["alphabet"]), terms)
    if r.kind == "fst":
        edges = [
            (s, r.label(i), r.label(o), t)
            for s, i, o, t in zip(a["src"], a["input"], a["output"], a["tgt"])
        ]
        return Fst(
            m["num_states"], m["initial"], m["finals"], edges,
            _alphabet_load(m["input_alphabet"]), _alphabet_load(m["output_alphabet"]),
        )
    if r.kind == "pda":
        pops, pushes = r.ragged("pops"), r.ragged("pushes")
        edges = [
            (s, r.label(l), p, t, u)
            for s, l, p, t, u in zip(a["src"], a["label"], pops, a["tgt"], pushes)
        ]
        return Pda(
            m["num_states"], m["initial"], m["finals"], edges, m["stack_symbols"], m["initial_stack"],
            _alphabet_load(m["alphabet"]), tuple(m["state_names"]),
            {int(k): v for k, v in m["symbol_names"].items()},
        )
    raise ContainerError(f"container holds a {r.kind!r}, not an automaton")


# ---------------------------------------------------------------------------
# compiled constraints


def constraint_to_bytes(c: CompiledConstraint) -> bytes:
    """Serialize a compiled constraint; the header binds the vocabulary fingerprint."""
    meta = {
        "constraint": c.kind, "vocab_size": c.vocab_size, "fingerprint": c.fingerprint,
        "source": c.source, "stats": c.stats, "warnings": list(c.warnings),
    }
    auto = c.automaton
    if c.kind == "regex":
        w = _Writer("regex_constraint", meta)
        meta.update(
            num_states=auto.num_states, initial=auto.initial,
            terminals=[[t.id, t.name, t.precedence] for t in c.terminals],
        )
        w.array("finals", auto.finals, "|b1")
        w.array("offsets", auto.offsets, "<i8")
        w.array("tokens", auto.tokens, "<i4")
        w.array("targets", auto.targets, "<i4")
        w.ragged("terminal_edges", [[x for e in es for x in e] for es in auto.terminal_edges])
        for lab, bits in c.terminal_masks.items():
            w.array(f"mask.{lab}", np.packbits(bits), "|u1")
        return w.to_bytes()
    w = _Writer("grammar_constraint", meta)
    meta.update(
        num_states=auto.num_states, initial=auto.initial, initial_stack=auto.initial_stack,
        symbol_names={str(k): v for k, v in auto.symbol_names.items()},
        state_names=list(auto.state_names),
    )
    groups = [(q, g) for q in range(auto.num_states) for g in auto.groups[q]]
    w.array("group_state", [q for q, _ in groups], "<i8")
    w.ragged("group_pops", [g.pops for _, g in groups])
    w.ragged("group_tokens", [g.tokens.tolist() for _, g in groups])
    w.ragged("group_targets", [g.targets.tolist() for _, g in groups])
    w.ragged("group_push_ids", [g.push_ids.tolist() for _, g in groups])
    w.ragged("push_table", auto.push_table)
    accept = [(q, p) for q in range(auto.num_states) for p in auto.accept_pops[q]]
    w.array("accept_state", [q for q, _ in accept], "<i8")
    w.ragged("accept_pops", [p for _, p in accept])
    return w.to_bytes()


def constraint_from_bytes(data: bytes, vocab: Vocabulary | None = None) -> CompiledConstraint:
    """Load a constraint, checking it against ``vocab`` when one is given."""
    r = _Reader.parse(data)
    m = r.meta
    if vocab is not None and (vocab.fingerprint != m["fingerprint"] or len(vocab) != m["vocab_size"]):
        raise VocabularyMismatch(
            f"constraint was compiled for vocabulary {m['fingerprint'][:12]}, got {vocab.fingerprint[:12]}"
        )
    if r.kind == "regex_constraint":
        n = m["num_states"]
        flat = r.ragged("terminal_edges")
        term_edges = tuple(tuple((row[i], row[i + 1]) for i in range(0, len(row), 2)) for row in flat)
        auto = TokenFsa(
            n, m["initial"], r.arrays["finals"].astype(bool), r.arrays["offsets"].astype(np.int64),
            r.arrays["tokens"].astype(np.int32), r.arrays["targets"].astype(np.int32), term_edges,
        )
        terminals = tuple(TerminalLabel(*t) for t in m["terminals"])
        masks = {}
        for t in terminals:
            bits = np.unpackbits(r.arrays[f"mask.{t.id}"], count=m["vocab_size"]).astype(bool)
            bits.flags.writeable = False
            masks[t.id] = bits
        c = CompiledConstraint("regex", m["vocab_size"], m["fingerprint"], auto, terminals, masks, m["source"])
    elif r.kind == "grammar_constraint":
        n = m["num_states"]
        pops = r.ragged("group_pops")
        toks = r.ragged("group_tokens")
        tgts = r.ragged("group_targets")
        pids = r.ragged("group_push_ids")
        groups: list[list] = [[] for _ in range(n)]
        for i, q in enumerate(r.arrays["group_state"].tolist()):
            groups[q].append(PdaGroup(
                pops[i], np.array(toks[i], dtype=np.int64), np.array(tgts[i], dtype=np.int64),
                np.array(pids[i], dtype=np.int64),
            ))
        accept: list[list] = [[] for _ in range(n)]
        for q, p in zip(r.arrays["accept_state"].tolist(), r.ragged("accept_pops")):
            accept[q].append(p)
        auto = TokenPda(
            n, m["initial"], m["initial_stack"], tuple(tuple(g) for g in groups),
            tuple(tuple(a) for a in accept), tuple(r.ragged("push_table")),
            {int(k): v for k, v in m["symbol_names"].items()}, tuple(m["state_names"]),
        )
        c = CompiledConstraint("grammar", m["vocab_size"], m["fingerprint"], auto, source=m["source"])
    else:
        raise ContainerError(f"container holds a {r.kind!r}, not a constraint")
    c.stats.update(m["stats"])
    c.warnings.extend(m["warnings"])
    return c


def save_constraint(c: CompiledConstraint, path: str | Path) -> None:
    Path(path).write_bytes(constraint_to_bytes(c))


def load_constraint(path: str | Path, vocab: Vocabulary | None = None) -> CompiledConstraint:
    return constraint_from_bytes(Path(path).read_bytes(), vocab)


# ---------------------------------------------------------------------------
# text dump


def _show_symbol(x: int, vocab: Vocabulary | None) -> str:
    if vocab is not None and 0 <= x < len(vocab):
        tok = vocab.tokens[x]
        return json.dumps(tok.decode("latin-1") if isinstance(tok, bytes) else tok, ensure_ascii=False)
    if is_terminal_label(x):
        return f"<T{x - (1 << 30)}>"
    if 0x21 <= x <= 0x7E:
        return chr(x)
    return f"U+{x:04X}"


def format_label(label, vocab: Vocabulary | None = None) -> str:
    """``ε``, a symbol (token text when ``vocab`` is given), or a character class."""
    if label is None:
        return "ε"
    if isinstance(label, CharSet):
        if len(label.ranges) == 1 and label.ranges[0][0] == label.ranges[0][1]:
            return _show_symbol(label.ranges[0][0], None)
        return str(label)
    return _show_symbol(label, vocab)


def _stack_ops(pops: tuple, pushes: tuple, names: dict) -> str:
    name = lambda s: names.get(s, str(s))  # noqa: E731
    parts = [")" + name(s) for s in reversed(pops)] + ["(" + name(s) for s in pushes]
    return " ".join(parts)


def dump_text(auto, vocab: Vocabulary | None = None) -> str:
    """One line per edge: ``src -> tgt label``.

    FST labels read ``in:out``. PDA labels are followed by the stack
    operations, each pop written ``)X`` (top first) and each push ``(Y``.
    Token ids are shown as their text when ``vocab`` is given.
    """
    if isinstance(auto, CompiledConstraint):
        auto = auto.automaton.to_fsa() if auto.kind == "regex" else auto.automaton.to_pda()
    lines = [f"initial {auto.initial}", "finals " + " ".join(str(q) for q in sorted(auto.finals))]
    if isinstance(auto, Fst):
        for s, i, o, t in auto.edges:
            lines.append(f"{s} -> {t} {format_label(i, vocab)}:{format_label(o)}")
    elif isinstance(auto, Pda):
        for s, lab, pops, t, pushes in auto.edges:
            ops = _stack_ops(pops, pushes, auto.symbol_names)
            lines.append(f"{s} -> {t} {format_label(lab, vocab)}" + (f" {ops}" if ops else ""))
    elif isinstance(auto, Fsa):
        for s, lab, t in auto.edges:
            lines.append(f"{s} -> {t} {format_label(lab, vocab)}")
    else:
        raise TypeError(f"cannot dump {type(auto).__name__}")
    return "\n".join(lines) + "\n"
