from __future__ import annotations

import json
import re

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fstconstrain import compile_regex, depth_truncated_json_regex, json_schema_to_regex
from fstconstrain.automata import as_symbols, fsa_accepts
from fstconstrain.bench import GAME_CHARACTER_SCHEMA
from fstconstrain.errors import SchemaError
from fstconstrain.schema import closed_schema, sample_instances
from schema_cases import SCHEMAS, rejected_mutants, validator_accepts


def accepts(pattern_or_fsa, text: str) -> bool:
    fsa = compile_regex(pattern_or_fsa) if isinstance(pattern_or_fsa, str) else pattern_or_fsa
    return fsa_accepts(fsa, as_symbols(text))


def test_boolean_field():
    fsa = compile_regex(json_schema_to_regex(SCHEMAS["boolean_field"]))
    assert accepts(fsa, '{"x": true}')
    assert accepts(fsa, '{"x": false}')
    assert not accepts(fsa, '{"x": 1}')
    assert not accepts(fsa, "{}")


def test_empty_object():
    fsa = compile_regex(json_schema_to_regex({"type": "object", "properties": {}}))
    assert accepts(fsa, "{}")
    assert not accepts(fsa, "{ }")
    assert not accepts(fsa, '{"a": 1}')


def test_leaf_matchers():
    assert json_schema_to_regex({"type": "boolean"}) == "(?:true|false)"
    num = compile_regex(json_schema_to_regex({"type": "number"}))
    for text, ok in [("0", True), ("-1.5e3", True), ("01", False), ("1.", False), (".5", False)]:
        assert accepts(num, text) == ok, text
    integer = compile_regex(json_schema_to_regex({"type": "integer"}))
    assert accepts(integer, "-12") and not accepts(integer, "1.0")


def test_game_character_instance_and_mutants():
    fsa = compile_regex(json_schema_to_regex(GAME_CHARACTER_SCHEMA))
    good = {
        "name": "Ayla", "class": "Rogue", "life": 40, "mana": 5,
        "equipment": [{"name": "Dagger", "durability": 3, "quality": "Magic"}],
    }
    text = json.dumps(good)
    assert validator_accepts(GAME_CHARACTER_SCHEMA, text)
    assert accepts(fsa, text)
    bad = [
        text.replace("Rogue", "Paladin"),
        text[:-1],
        text.replace('"life": 40', '"life": "40"'),
        text.replace('"mana": 5', '"mana": 5.5'),
        text.replace('"Magic"', '"Rare"'),
        text.replace("[{", "{").replace("}]", "}"),
        text.replace('"durability": 3', '"durability": true'),
        "{" + text,
        text.replace('"name": "Ayla"', '"name": 7'),
        text.replace('"equipment": [', '"equipment": [1, '),
    ]
    for b in bad:
        assert not validator_accepts(GAME_CHARACTER_SCHEMA, b), b
        assert not accepts(fsa, b), b


def test_optional_and_nullable():
    fsa = compile_regex(json_schema_to_regex(SCHEMAS["optional_nullable"]))
    assert accepts(fsa, '{"id": 1}')
    assert accepts(fsa, '{"id": 1, "score": null}')
    assert accepts(fsa, '{"id": 1, "score": 2.5, "tag": "a"}')
    assert accepts(fsa, '{"id": 1, "tag": "a"}')
    assert not accepts(fsa, '{"score": 2.5}')
    assert not accepts(fsa, '{"id": 1, "tag": null}')


def test_field_order_is_enforced():
    fsa = compile_regex(json_schema_to_regex(SCHEMAS["nested"]))
    assert accepts(fsa, '{"point": {"x": 1, "y": 2}, "label": "p"}')
    assert not accepts(fsa, '{"label": "p", "point": {"x": 1, "y": 2}}')


def test_flexible_whitespace():
    pattern = json_schema_to_regex(SCHEMAS["boolean_field"], flexible_whitespace=True)
    for text in ['{"x": true}', '{"x":true}', '{ "x" : false }']:
        assert accepts(pattern, text), text


def test_enum_literal_with_semicolon():
    fsa = compile_regex(json_schema_to_regex(SCHEMAS["mixed_enum"]))
    for v in ["red", 3, True, None, "blue;green"]:
        assert accepts(fsa, json.dumps(v))
    assert not accepts(fsa, '"green"')


@pytest.mark.parametrize("schema,fragment", [
    ({"$defs": {"t": {"type": "array", "items": {"$ref": "#/$defs/t"}}}, "$ref": "#/$defs/t"}, "recursive"),
    ({"type": "tuple"}, "unknown type"),
    ({"enum": []}, "non-empty"),
    ({"type": "array"}, "items"),
    ({"$ref": "http://example.com/s"}, "local"),
    ([], "JSON object"),
])
def test_schema_errors(schema, fragment):
    with pytest.raises(SchemaError) as info:
        json_schema_to_regex(schema)
    assert fragment in str(info.value)


def test_closed_schema_adds_conventions():
    s = closed_schema(SCHEMAS["optional_nullable"])
    assert s["additionalProperties"] is False
    assert s["properties"]["score"] == {"anyOf": [{"type": "number"}, {"type": "null"}]}


@pytest.mark.parametrize("name", sorted(SCHEMAS))
def test_samples_and_mutants_agree_with_validator(name):
    schema = SCHEMAS[name]
    pattern = json_schema_to_regex(schema)
    fsa = compile_regex(pattern)
    samples = sample_instances(pattern, 100, seed=1)
    for s in samples:
        assert validator_accepts(schema, s), s
    mutants = rejected_mutants(schema, samples, 100, seed=2)
    assert len(mutants) == 100
    for m in mutants:
        assert not accepts(fsa, m), m


# ---------------------------------------------------------------------------
# schema-free JSON


def _depths(value) -> tuple[int, int]:
    if isinstance(value, dict):
        inner = [_depths(v) for v in value.values()] or [(0, 0)]
        return 1 + max(o for o, _ in inner), max(a for _, a in inner)
    if isinstance(value, list):
        inner = [_depths(v) for v in value] or [(0, 0)]
        return max(o for o, _ in inner), 1 + max(a for _, a in inner)
    return 0, 0


def test_depth_zero_is_primitives_only():
    fsa = compile_regex(depth_truncated_json_regex(0, 0))
    for text in ["5", '"a"', "true", "null", "-2.5e1"]:
        assert accepts(fsa, text), text
    for text in ["{}", "[]", '{"a": 1}']:
        assert not accepts(fsa, text), text


def test_object_depth_one():
    fsa = compile_regex(depth_truncated_json_regex(1, 0))
    assert accepts(fsa, '{"a": 1}')
    assert accepts(fsa, "{}")
    assert not accepts(fsa, '{"a": {"b": 1}}')
    assert not accepts(fsa, '{"a": [1]}')


json_values = st.recursive(
    st.one_of(st.booleans(), st.none(), st.integers(-50, 50), st.text(alphabet="ab ", max_size=3)),
    lambda sub: st.one_of(st.lists(sub, max_size=3), st.dictionaries(st.text(alphabet="kq", max_size=2), sub, max_size=3)),
    max_leaves=8,
)


@pytest.fixture(scope="module")
def depth_fsas():
    return {(o, a): compile_regex(depth_truncated_json_regex(o, a)) for o in range(3) for a in range(3)}


@given(json_values, st.integers(0, 2), st.integers(0, 2))
def test_depth_limits_match_counting_oracle(depth_fsas, value, ko, ka):
    text = json.dumps(value)
    o, a = _depths(value)
    assert accepts(depth_fsas[(ko, ka)], text) == (o <= ko and a <= ka), text


def test_depth_truncated_samples_are_json():
    pattern = depth_truncated_json_regex(2, 2)
    for s in sample_instances(pattern, 100, seed=3):
        value = json.loads(s)
        o, a = _depths(value)
        assert o <= 2 and a <= 2


def test_negative_depth_rejected():
    with pytest.raises(SchemaError):
        depth_truncated_json_regex(-1, 0)


def test_generated_patterns_use_quoted_text():
    pattern = json_schema_to_regex({"type": "string"})
    assert pattern == "(?P<QUOTED_TEXT>)"
    assert re.search("QUOTED_TEXT", json_schema_to_regex(GAME_CHARACTER_SCHEMA))
