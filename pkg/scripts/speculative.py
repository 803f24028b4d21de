"""Speculative decoding under a constraint: acceptance rate by block size and draft noise.

Every run is checked against target-only greedy decoding; any difference is reported.

    python scripts/speculative.py --seeds 100 --noise 0.25 0.5 1.0
"""

from __future__ import annotations

import argparse

import numpy as np

from fstconstrain import Vocabulary, compile_grammar_constraint
from fstconstrain.grammar import JSON_GRAMMAR
from fstconstrain.harness import MockLm, constrained_decode, speculative_decode


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--blocks", type=int, nargs="+", default=[1, 2, 4, 8])
    ap.add_argument("--noise", type=float, nargs="+", default=[0.25, 0.5, 1.0])
    args = ap.parse_args()

    vocab = Vocabulary.from_strings(["{", "}", '"a"', ": ", "1", "[", "]", ", ", "true", " "])
    c = compile_grammar_constraint(JSON_GRAMMAR, vocab)
    plain = {s: constrained_decode(MockLm(s, vocab), c) for s in range(args.seeds)}
    print(f"{'noise':>6} {'block':>6} {'acceptance':>11} {'mismatches':>11}")
    for noise in args.noise:
        for block in args.blocks:
            rates, bad = [], 0
            for s in range(args.seeds):
                target = MockLm(s, vocab)
                draft = MockLm(s + 1_000_003, vocab, base=target, noise=noise)
                res = speculative_decode(draft, target, c, block=block)
                rates.append(res.acceptance_rate)
                bad += res.tokens != plain[s].tokens
            print(f"{noise:>6.2f} {block:>6} {np.mean(rates):>11.3f} {bad:>11}")


if __name__ == "__main__":
    main()
