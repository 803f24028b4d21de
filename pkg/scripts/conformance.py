"""Constrained vs unconstrained conformance of seeded mock decodes on the same logit streams.

    python scripts/conformance.py --runs 1000
"""

from __future__ import annotations

import argparse
import re

from fstconstrain import Vocabulary, compile_grammar_constraint, compile_regex_constraint
from fstconstrain.grammar import JSON_GRAMMAR
from fstconstrain.harness import conformance_run


def fixtures():
    food = Vocabulary.from_strings(["f", "o", "oo", "foo", "for", "food", "d"])
    api = Vocabulary.from_strings(["fo", "o(1", "2", "3)", "bar", "(", "456", ")", "foo", "123", "ba", "r(4", "5", "6)"])
    anbn = Vocabulary.from_strings(["a", "b", "bb", "aaab"])
    js = Vocabulary.from_strings(["{", "}", '"a"', ": ", "1", "[", "]", ", ", "true", " "])
    api_pattern = r"(?:foo|bar)\([0-9]+\)"
    yield "(foo)+d", food, compile_regex_constraint("(foo)+d", food), None
    yield "api", api, compile_regex_constraint(api_pattern, api), lambda s: bool(re.fullmatch(api_pattern, s))
    yield "anbn", anbn, compile_grammar_constraint("S -> /ab/\nS -> /a/ S /b/", anbn), None
    yield "json", js, compile_grammar_constraint(JSON_GRAMMAR, js), None


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=1000)
    ap.add_argument("--max-steps", type=int, default=512)
    args = ap.parse_args()
    print(f"{'constraint':<12} {'constrained':>12} {'unconstrained':>14} {'truncated':>10}")
    for name, vocab, c, pred in fixtures():
        r = conformance_run(c, vocab, range(args.runs), pred, args.max_steps, name)
        print(f"{name:<12} {r.constrained_rate:>12.3f} {r.unconstrained_rate:>14.3f} {r.truncated:>10}")


if __name__ == "__main__":
    main()
