"""Compile and per-step timings for the five benchmark constraints on a synthetic vocabulary.

    python scripts/bench.py --vocab-size 256000 --runs 10 --steps 10000 --out results/bench.jsonl
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

from fstconstrain.bench import format_table, rows_to_jsonl, run_benchmark, synthetic_vocabulary


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--vocab-size", type=int, default=256_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--steps", type=int, default=10_000)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    t0 = time.perf_counter()
    vocab = synthetic_vocabulary(args.vocab_size, seed=args.seed)
    _ = vocab.trie
    print(f"vocabulary: {len(vocab)} tokens, built with trie in {time.perf_counter() - t0:.1f} s")
    rows = run_benchmark(vocab, runs=args.runs, steps=args.steps)
    print(format_table(rows))
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(rows_to_jsonl(rows) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
