"""JSON schemas to patterns, schema-free depth-limited JSON, and pattern sampling.

Whitespace is canonical by default: exactly one space after ``:`` and
``,`` and nowhere else, which is also what ``json.dumps`` produces with its
default separators. Object fields appear in declaration order and objects
are closed (no unknown fields). Fields listed in ``required`` must appear;
when ``required`` is absent every field is optional, as in JSON Schema.
"""

from __future__ import annotations

import copy
import json
import random
from dataclasses import dataclass

from .automata import Fsa, is_terminal_label, label_ranges
from .errors import SchemaError
from .regex import escape_literal

STRING = "(?P<QUOTED_TEXT>)"
INTEGER = r"-?(?:0|[1-9]\d*)"
NUMBER = r"-?(?:0|[1-9]\d*)(?:\.\d+)?(?:[eE][+-]?\d+)?"
BOOLEAN = "(?:true|false)"
NULL = "null"
JSON_STRING = r'"(?:[^"\\\x00-\x1f]|\\(?:["\\/bfnrt]|u[0-9a-fA-F]{4}))*"'


def _lit(text: str) -> str:
    # ';' separates sugar arguments, so escape it wherever literals may land
    return escape_literal(text).replace(";", "\\;")


@dataclass(frozen=True)
class SchemaOptions:
    flexible_whitespace: bool = False

    @property
    def colon(self) -> str:
        return " ?: ?" if self.flexible_whitespace else ": "

    @property
    def comma(self) -> str:
        return " ?, ?" if self.flexible_whitespace else ", "


def json_schema_to_regex(schema: dict, flexible_whitespace: bool = False) -> str:
    """Pattern whose language is the schema-conformant JSON texts."""
    if not isinstance(schema, dict):
        raise SchemaError("schema must be a JSON object")
    return _Translator(schema, SchemaOptions(flexible_whitespace)).value(schema, ())


class _Translator:
    def __init__(self, root: dict, options: SchemaOptions):
        self.root = root
        self.opt = options

    def resolve(self, ref: str, stack: tuple) -> tuple[dict, tuple]:
        if ref in stack:
            raise SchemaError(f"recursive reference {ref!r} is not supported")
        if not ref.startswith("#/"):
            raise SchemaError(f"only local references are supported, got {ref!r}")
        node = self.root
        for part in ref[2:].split("/"):
            part = part.replace("~1", "/").replace("~0", "~")
            if not isinstance(node, dict) or part not in node:
                raise SchemaError(f"unresolvable reference {ref!r}")
            node = node[part]
        return node, stack + (ref,)

    def value(self, schema, stack: tuple) -> str:
        if schema is True or schema == {}:
            raise SchemaError("unconstrained values are not supported; give a type")
        if not isinstance(schema, dict):
            raise SchemaError(f"bad schema node {schema!r}")
        if "$ref" in schema:
            target, stack = self.resolve(schema["$ref"], stack)
            return self.value(target, stack)
        core = self.core(schema, stack)
        if schema.get("nullable"):
            core = f"(?:{core}|null)"
        return core

    def core(self, schema: dict, stack: tuple) -> str:
        if "const" in schema:
            return self.literal_value(schema["const"])
        if "enum" in schema:
            values = schema["enum"]
            if not isinstance(values, list) or not values:
                raise SchemaError("enum must be a non-empty list")
            return "(?:" + "|".join(self.literal_value(v) for v in values) + ")"
        for key in ("anyOf", "oneOf"):
            if key in schema:
                options = schema[key]
                if not isinstance(options, list) or not options:
                    raise SchemaError(f"{key} must be a non-empty list")
                return "(?:" + "|".join(self.value(s, stack) for s in options) + ")"
        kind = schema.get("type")
        if kind is None:
            if "properties" in schema:
                kind = "object"
            elif "items" in schema:
                kind = "array"
            else:
                raise SchemaError(f"schema has no type: {schema!r}")
        if isinstance(kind, list):
            if not kind:
                raise SchemaError("empty type list")
            parts = [self.core({**schema, "type": k}, stack) for k in kind]
            return "(?:" + "|".join(parts) + ")"
        if kind == "string":
            return STRING
        if kind == "integer":
            return INTEGER
        if kind == "number":
            return NUMBER
        if kind == "boolean":
            return BOOLEAN
        if kind == "null":
            return NULL
        if kind == "object":
            return self.object(schema, stack)
        if kind == "array":
            return self.array(schema, stack)
        raise SchemaError(f"unknown type {kind!r}")

    def literal_value(self, value) -> str:
        text = json.dumps(value, separators=(", ", ": "), ensure_ascii=False)
        return _lit(text)

    def object(self, schema: dict, stack: tuple) -> str:
        props = schema.get("properties", {})
        if not isinstance(props, dict):
            raise SchemaError("properties must be an object")
        required = schema.get("required")
        if required is None:
            required = []
        unknown = set(required) - set(props)
        if unknown:
            raise SchemaError(f"required fields without properties: {sorted(unknown)}")
        flex = self.opt.flexible_whitespace
        items = []
        for name, sub in props.items():
            pad = " ?" if flex else ""
            key = _lit(json.dumps(name, ensure_ascii=False))
            colon = self.opt.colon
            items.append((f"{pad}{key}{colon}{self.value(sub, stack)}{pad}", name in required))
        if not items:
            return r"\{ ?\}" if flex else r"\{\}"
        if all(req for _, req in items):
            delim = "," if flex else ", "
            body = _lit(delim).join(f"(?:{it})" for it, _ in items)
            return r"\{" + body + r"\}"
        fields = ";".join(f"item{'!' if req else ''}={it}" for it, req in items)
        delim = "," if flex else ", "
        body = f"(?P<DELIMITED_SUBSEQUENCE_OF>{fields};delim={delim})"
        if flex and not any(req for _, req in items):
            body = f"(?: |{body})"
        return r"\{" + body + r"\}"

    def array(self, schema: dict, stack: tuple) -> str:
        items = schema.get("items")
        if items is None:
            raise SchemaError("arrays need an items schema")
        lo = int(schema.get("minItems", 0))
        hi = schema.get("maxItems")
        if lo < 0 or (hi is not None and int(hi) < lo):
            raise SchemaError("bad minItems/maxItems")
        flex = self.opt.flexible_whitespace
        item = self.value(items, stack)
        if flex:
            item = f" ?{item} ?"
        delim = "," if flex else ", "
        bound = "*" if hi is None else str(int(hi))
        body = f"(?P<DELIMITED_LIST>item={item};delim={delim};min={lo};max={bound})"
        if flex and lo == 0:
            body = f"(?: |{body})"
        return r"\[" + body + r"\]"


def depth_truncated_json_regex(max_object_depth: int, max_array_depth: int) -> str:
    """Schema-free JSON with at most the given object and array nesting.

    Nesting counts containers of one kind along any path, so depth 0 allows
    no containers of that kind at all.
    """
    if max_object_depth < 0 or max_array_depth < 0:
        raise SchemaError("depth limits must be non-negative")
    primitive = f"(?:{JSON_STRING}|{NUMBER}|true|false|null)"
    memo: dict[tuple[int, int], str] = {}

    def value(o: int, a: int) -> str:
        key = (o, a)
        if key in memo:
            return memo[key]
        options = [primitive]
        if o > 0:
            inner = value(o - 1, a)
            member = f"{JSON_STRING}: {inner}"
            options.append(r"\{" + f"(?P<DELIMITED_LIST>item={member};delim=, ;min=0;max=*)" + r"\}")
        if a > 0:
            inner = value(o, a - 1)
            options.append(r"\[" + f"(?P<DELIMITED_LIST>item={inner};delim=, ;min=0;max=*)" + r"\]")
        memo[key] = "(?:" + "|".join(options) + ")"
        return memo[key]

    return value(max_object_depth, max_array_depth)


def closed_schema(schema: dict) -> dict:
    """Copy of ``schema`` in standard JSON Schema with the module's conventions made explicit.

    Objects gain ``additionalProperties: false`` and ``nullable`` becomes an
    ``anyOf`` with ``null``, so a stock validator agrees with the patterns.
    """
    schema = copy.deepcopy(schema)

    def fix(node):
        if isinstance(node, list):
            return [fix(n) for n in node]
        if not isinstance(node, dict):
            return node
        node = {k: fix(v) if k in ("properties", "items", "anyOf", "oneOf", "$defs", "definitions") else v
                for k, v in node.items()}
        if "properties" in node:
            node["properties"] = {k: fix(v) for k, v in node["properties"].items()}
        if "$defs" in node:
            node["$defs"] = {k: fix(v) for k, v in node["$defs"].items()}
        if "definitions" in node:
            node["definitions"] = {k: fix(v) for k, v in node["definitions"].items()}
        if node.get("type") == "object" or "properties" in node:
            node.setdefault("additionalProperties", False)
        if node.pop("nullable", False):
            node = {"anyOf": [node, {"type": "null"}]}
        return node

    return fix(schema)


# ---------------------------------------------------------------------------
# sampling


_PRINTABLE = [(0x20, 0x7E)]


def _pick_char(label, rng: random.Random) -> int:
    ranges = label_ranges(label)
    nice = []
    for lo, hi in ranges:
        for plo, phi in _PRINTABLE:
            a, b = max(lo, plo), min(hi, phi)
            if a <= b:
                nice.append((a, b))
    pool = nice or [(lo, min(hi, lo + 255)) for lo, hi in ranges]
    weights = [b - a + 1 for a, b in pool]
    a, b = rng.choices(pool, weights=weights)[0]
    return rng.randint(a, b)


def sample_from_fsa(fsa: Fsa, rng: random.Random, soft_limit: int = 60, stop_prob: float = 0.3) -> str:
    """Random member of a character DFA's language.

    The walk only takes edges that can still reach a final state, and once
    ``soft_limit`` characters are out it heads for the nearest final state.
    """
    dist = _distance_to_final(fsa)
    if dist[fsa.initial] is None:
        raise SchemaError("the pattern's language is empty")
    q = fsa.initial
    out: list[int] = []
    while True:
        options = [
            (label, t) for label, t in fsa.out[q]
            if label is not None and not is_terminal_label(label) and dist[t] is not None
        ]
        if q in fsa.finals and (not options or rng.random() < stop_prob):
            break
        if len(out) >= soft_limit:
            options = [o for o in options if dist[o[1]] < dist[q]] or options
        label, q = rng.choice(options)
        out.append(_pick_char(label, rng))
    return "".join(chr(c) for c in out)


def _distance_to_final(fsa: Fsa) -> list:
    dist: list = [None] * fsa.num_states
    back: dict[int, list[int]] = {}
    for s, label, t in fsa.edges:
        if label is not None and not is_terminal_label(label):
            back.setdefault(t, []).append(s)
    frontier = list(fsa.finals)
    for q in frontier:
        dist[q] = 0
    d = 0
    while frontier:
        d += 1
        nxt = []
        for q in frontier:
            for p in back.get(q, ()):
                if dist[p] is None:
                    dist[p] = d
                    nxt.append(p)
        frontier = nxt
    return dist


def sample_instances(pattern: str, n: int, seed: int = 0, soft_limit: int = 60) -> list[str]:
    from .regex import compile_regex

    fsa = compile_regex(pattern)
    rng = random.Random(seed)
    return [sample_from_fsa(fsa, rng, soft_limit) for _ in range(n)]
