"""Constrained decoding by composing a detokenizing transducer with regex and grammar automata."""

from .automata import (
    EPSILON,
    TERMINAL_BASE,
    Fsa,
    Fst,
    Pda,
    compose_fst_fsa,
    compose_fst_pda,
    determinize,
    fsa_accepts,
    fst_transduce,
    is_deterministic,
    pda_accepts,
    remove_epsilons,
)
from .charset import CharSet
from .detokenizer import (
    Vocabulary,
    build_detokenizing_fst,
    compact_trie,
    load_vocabulary,
    save_vocabulary,
)
from .engine import (
    CompiledConstraint,
    DecodeState,
    Session,
    advance,
    allowed_tokens,
    apply_mask,
    compile_grammar_constraint,
    compile_regex_constraint,
    rewind,
)
from .mask import TokenMask
from .regex import (
    TerminalLabel,
    build_substring_fsa,
    compile_regex,
    expand_sugar,
    format_regex,
    parse_regex,
    terminal_mask,
)
from .schema import depth_truncated_json_regex, json_schema_to_regex

__version__ = "0.1.0"
