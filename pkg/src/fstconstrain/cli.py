"""Command-line front end: compile, mask, decode, schema2regex, bench, gen-vocab.

Exit codes: 0 success, 1 other failure, 2 usage, 3 parse error,
4 determinism conflict, 5 vocabulary mismatch, 6 resource cap,
7 constraint violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from time import perf_counter

from .detokenizer import Vocabulary, load_vocabulary, save_vocabulary
from .errors import (
    BudgetExceeded,
    ConstraintViolation,
    DeterminismError,
    FstConstrainError,
    GrammarSyntaxError,
    RegexSyntaxError,
    ResourceLimitError,
    SchemaError,
    VocabularyError,
    VocabularyMismatch,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_DETERMINISM = 4
EXIT_VOCAB_MISMATCH = 5
EXIT_RESOURCE = 6
EXIT_VIOLATION = 7


@dataclass
class RunConfig:
    command: str
    vocab: str | None = None
    vocab_format: str | None = None
    byte_mode: bool = False
    eos_id: int | None = None
    regex: str | None = None
    regex_file: str | None = None
    grammar: str | None = None
    schema: str | None = None
    flexible_whitespace: bool = False
    max_states: int | None = None
    constraint: str | None = None
    out: str | None = None
    seed: int = 0
    runs: int = 10
    as_json: bool = False

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> RunConfig:
        fields = cls.__dataclass_fields__
        return cls(**{k: v for k, v in vars(ns).items() if k in fields})

    def sources(self) -> list[str]:
        return [k for k in ("regex", "regex_file", "grammar", "schema") if getattr(self, k) is not None]


def _emit(cfg: RunConfig, payload: dict, text: str) -> None:
    print(json.dumps(payload, ensure_ascii=False) if cfg.as_json else text)


def _load_vocab(cfg: RunConfig) -> Vocabulary:
    if cfg.vocab is None:
        raise VocabularyError("--vocab is required")
    return load_vocabulary(cfg.vocab, cfg.vocab_format, eos_id=cfg.eos_id, byte_mode=cfg.byte_mode)


def _constraint_source(cfg: RunConfig) -> tuple[str, str]:
    """``(kind, text)`` of the single constraint source."""
    given = cfg.sources()
    if len(given) != 1:
        raise _Usage("give exactly one of --regex, --regex-file, --grammar, --schema")
    if cfg.regex is not None:
        return "regex", cfg.regex
    if cfg.regex_file is not None:
        return "regex", Path(cfg.regex_file).read_text(encoding="utf-8").rstrip("\n")
    if cfg.grammar is not None:
        return "grammar", Path(cfg.grammar).read_text(encoding="utf-8")
    from .schema import json_schema_to_regex

    schema = json.loads(Path(cfg.schema).read_text(encoding="utf-8"))
    return "regex", json_schema_to_regex(schema, cfg.flexible_whitespace)


class _Usage(Exception):
    pass


def _compile(cfg: RunConfig, vocab: Vocabulary):
    from .engine import compile_grammar_constraint, compile_regex_constraint

    kind, text = _constraint_source(cfg)
    timings: dict = {}
    t0 = perf_counter()
    if kind == "grammar":
        c = compile_grammar_constraint(text, vocab, timings=timings)
    else:
        caps = {} if cfg.max_states is None else {"max_states": cfg.max_states}
        c = compile_regex_constraint(text, vocab, timings=timings, **caps)
    timings["total"] = perf_counter() - t0
    return c, timings


def _get_constraint(cfg: RunConfig, vocab: Vocabulary):
    if cfg.constraint is not None:
        if cfg.sources():
            raise _Usage("give either --constraint or a constraint source, not both")
        from .serialize import load_constraint

        return load_constraint(cfg.constraint, vocab)
    return _compile(cfg, vocab)[0]


# ---------------------------------------------------------------------------
# subcommands


def cmd_compile(cfg: RunConfig) -> int:
    from .serialize import save_constraint

    vocab = _load_vocab(cfg)
    c, timings = _compile(cfg, vocab)
    if cfg.out:
        save_constraint(c, cfg.out)
    stages = {k: round(v * 1e3, 3) for k, v in timings.items()}
    payload = {
        "kind": c.kind, "states": c.num_states, "edges": c.num_edges,
        "vocab_size": len(vocab), "fingerprint": vocab.fingerprint,
        "stages_ms": stages, "out": cfg.out, "warnings": c.warnings,
    }
    lines = [f"{c.kind} constraint: {c.num_states} states, {c.num_edges} edges"]
    lines += [f"  {k:<16}{v:>10.3f} ms" for k, v in stages.items()]
    if cfg.out:
        lines.append(f"wrote {cfg.out}")
    lines += [f"warning: {w}" for w in c.warnings]
    _emit(cfg, payload, "\n".join(lines))
    return EXIT_OK


def _parse_history(text: str | None) -> list[int]:
    if not text:
        return []
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise _Usage(f"history must be token ids: {text!r}") from exc


def cmd_mask(cfg: RunConfig, history: list[int], fmt: str) -> int:
    from .engine import advance, allowed_tokens

    vocab = _load_vocab(cfg)
    c = _get_constraint(cfg, vocab)
    state = c.initial_state()
    for t in history:
        state = advance(c, state, t)
    mask = allowed_tokens(c, state)
    payload = {"history": history, **mask.to_json(fmt)}
    if fmt == "ids":
        shown = " ".join(str(i) for i in mask.ids())
    else:
        shown = mask.to_hex()
    _emit(cfg, payload, f"allowed ({mask.count()}): {shown}\nfinish: {str(mask.finish).lower()}")
    return EXIT_OK


def cmd_decode(cfg: RunConfig, count: int, max_steps: int, block: int | None,
               draft_seed: int | None, draft_noise: float) -> int:
    from .harness import (
        MockLm,
        constrained_decode,
        language_predicate,
        results_to_jsonl,
        speculative_decode,
    )

    vocab = _load_vocab(cfg)
    c = _get_constraint(cfg, vocab)
    in_language = language_predicate(c, vocab)
    results = []
    for seed in range(cfg.seed, cfg.seed + count):
        target = MockLm(seed, vocab)
        if block is None:
            res = constrained_decode(target, c, max_steps)
        else:
            dseed = seed + 1_000_003 if draft_seed is None else draft_seed + (seed - cfg.seed)
            draft = MockLm(dseed, vocab, base=target, noise=draft_noise)
            res = speculative_decode(draft, target, c, block, max_steps)
        res.conformant = res.finished and in_language(vocab.detokenize(res.tokens))
        results.append(res)
    text = results_to_jsonl(results)
    if cfg.out:
        Path(cfg.out).write_text(text + "\n", encoding="utf-8")
    if cfg.as_json or cfg.out:
        if not cfg.out:
            print(text)
        else:
            rate = sum(bool(r.conformant) for r in results) / max(len(results), 1)
            print(json.dumps({"runs": len(results), "conformance": rate, "out": cfg.out}))
    else:
        for r in results:
            extra = "" if r.acceptance_rate is None else f" acceptance={r.acceptance_rate:.3f}"
            flag = "ok" if r.conformant else ("truncated" if r.truncated else "NONCONFORMANT")
            print(f"seed {r.seed}: {r.text!r} [{flag}]{extra}")
    return EXIT_OK


def cmd_schema2regex(cfg: RunConfig) -> int:
    from .schema import json_schema_to_regex

    if cfg.schema is None:
        raise _Usage("--schema is required")
    schema = json.loads(Path(cfg.schema).read_text(encoding="utf-8"))
    pattern = json_schema_to_regex(schema, cfg.flexible_whitespace)
    _emit(cfg, {"pattern": pattern}, pattern)
    return EXIT_OK


def cmd_bench(cfg: RunConfig, vocab_size: int, steps: int) -> int:
    from .bench import format_table, rows_to_jsonl, run_benchmark, synthetic_vocabulary

    if cfg.vocab is not None:
        vocab = _load_vocab(cfg)
    else:
        vocab = synthetic_vocabulary(vocab_size, seed=cfg.seed)
    t0 = perf_counter()
    _ = vocab.trie  # precompute, excluded from per-constraint timing
    trie_s = perf_counter() - t0
    if cfg.sources():
        kind, text = _constraint_source(cfg)
        rows = run_benchmark(vocab, {"custom": text}, cfg.runs, steps, kind)
    else:
        rows = run_benchmark(vocab, None, cfg.runs, steps)
    if cfg.out:
        Path(cfg.out).write_text(rows_to_jsonl(rows) + "\n", encoding="utf-8")
    payload = {"vocab_size": len(vocab), "trie_ms": trie_s * 1e3, "rows": [r.to_json() for r in rows]}
    head = f"vocabulary: {len(vocab)} tokens (trie built in {trie_s * 1e3:.0f} ms)"
    _emit(cfg, payload, head + "\n" + format_table(rows))
    return EXIT_OK


def cmd_gen_vocab(cfg: RunConfig, size: int, max_len: int) -> int:
    from .bench import synthetic_vocabulary

    if not cfg.out:
        raise _Usage("--out is required")
    vocab = synthetic_vocabulary(size, seed=cfg.seed, max_len=max_len, byte_mode=cfg.byte_mode)
    fmt = cfg.vocab_format
    if cfg.byte_mode and fmt is None and not cfg.out.endswith((".tsv", ".txt")):
        fmt = "json"
    save_vocabulary(vocab, cfg.out, fmt)
    _emit(cfg, {"size": len(vocab), "fingerprint": vocab.fingerprint, "out": cfg.out},
          f"wrote {len(vocab)} tokens to {cfg.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _vocab_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--vocab", required=required, help="vocabulary file (JSON array or id<TAB>token TSV)")
    p.add_argument("--vocab-format", choices=["json", "tsv"], help="override format detection by suffix")
    p.add_argument("--byte-mode", action="store_true", help="treat tokens as byte strings")
    p.add_argument("--eos-id", type=int, help="reserved end-of-sequence id inside the vocabulary")


def _source_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("constraint source (exactly one)")
    g.add_argument("--regex", help="pattern text")
    g.add_argument("--regex-file", help="file holding the pattern")
    g.add_argument("--grammar", help="grammar file")
    g.add_argument("--schema", help="JSON schema file")
    g.add_argument("--flexible-whitespace", action="store_true", help="optional spaces around separators")
    g.add_argument("--max-states", type=int, help="determinization state cap for patterns")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fstconstrain", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", dest="as_json", action="store_true", help="machine-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", parents=[common], help="compile a constraint against a vocabulary")
    _vocab_args(p)
    _source_args(p)
    p.add_argument("--out", help="write the constraint container here")

    p = sub.add_parser("mask", parents=[common], help="allowed tokens after a token history")
    _vocab_args(p)
    _source_args(p)
    p.add_argument("--constraint", help="compiled constraint container")
    p.add_argument("--history", default="", help="token ids, comma or space separated")
    p.add_argument("--format", dest="mask_format", choices=["ids", "hex"], default="ids")

    p = sub.add_parser("decode", parents=[common], help="mock-LM decoding under a constraint")
    _vocab_args(p)
    _source_args(p)
    p.add_argument("--constraint", help="compiled constraint container")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--count", type=int, default=1, help="number of seeds")
    p.add_argument("--max-steps", type=int, default=256)
    p.add_argument("--speculative", type=int, metavar="BLOCK", help="speculative decoding with this block size")
    p.add_argument("--draft-seed", type=int, help="first draft seed (default: derived from the target seed)")
    p.add_argument("--draft-noise", type=float, default=0.5, help="draft = target + noise * independent draw")
    p.add_argument("--out", help="write JSON lines here")

    p = sub.add_parser("schema2regex", parents=[common], help="translate a JSON schema to a pattern")
    p.add_argument("--schema", required=True)
    p.add_argument("--flexible-whitespace", action="store_true")

    p = sub.add_parser("bench", parents=[common], help="compile and per-step timings")
    _vocab_args(p, required=False)
    _source_args(p)
    p.add_argument("--vocab-size", type=int, default=256_000, help="synthetic vocabulary size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--out", help="write JSON lines here")

    p = sub.add_parser("gen-vocab", parents=[common], help="write a synthetic vocabulary")
    p.add_argument("--size", type=int, default=256_000)
    p.add_argument("--max-len", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--byte-mode", action="store_true")
    p.add_argument("--vocab-format", choices=["json", "tsv"])
    p.add_argument("--out", required=True)
    return parser


def _dispatch(ns: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(ns)
    if ns.command == "compile":
        return cmd_compile(cfg)
    if ns.command == "mask":
        return cmd_mask(cfg, _parse_history(ns.history), ns.mask_format)
    if ns.command == "decode":
        return cmd_decode(cfg, ns.count, ns.max_steps, ns.speculative, ns.draft_seed, ns.draft_noise)
    if ns.command == "schema2regex":
        return cmd_schema2regex(cfg)
    if ns.command == "bench":
        return cmd_bench(cfg, ns.vocab_size, ns.steps)
    if ns.command == "gen-vocab":
        return cmd_gen_vocab(cfg, ns.size, ns.max_len)
    raise _Usage(f"unknown command {ns.command!r}")


def exit_code(exc: BaseException) -> int:
    """Exit status for an exception raised while running a command."""
    if isinstance(exc, (RegexSyntaxError, GrammarSyntaxError, SchemaError, json.JSONDecodeError)):
        return EXIT_PARSE
    if isinstance(exc, DeterminismError):
        return EXIT_DETERMINISM
    if isinstance(exc, VocabularyMismatch):
        return EXIT_VOCAB_MISMATCH
    if isinstance(exc, (ResourceLimitError, BudgetExceeded)):
        return EXIT_RESOURCE
    if isinstance(exc, ConstraintViolation):
        return EXIT_VIOLATION
    if isinstance(exc, _Usage):
        return EXIT_USAGE
    return EXIT_ERROR


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return _dispatch(ns)
    except (FstConstrainError, _Usage, OSError, json.JSONDecodeError) as exc:
        code = exit_code(exc)
        if getattr(ns, "as_json", False):
            print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}))
        else:
            print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
