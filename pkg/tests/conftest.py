from __future__ import annotations

import os

import pytest
from hypothesis import HealthCheck, settings

from fstconstrain import Vocabulary

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("quick", max_examples=15, deadline=None)
settings.register_profile(
    "thorough", max_examples=500, deadline=None, suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


FOOD_TOKENS = ["f", "o", "oo", "foo", "for", "food", "d"]
API_TOKENS = ["fo", "o(1", "2", "3)", "bar", "(", "456", ")", "foo", "123", "ba", "r(4", "5", "6)", "1", "3", "4", "6"]
ANBN_TOKENS = ["a", "b", "bb", "aaab"]
ANBN_GRAMMAR = "S -> /ab/\nS -> /a/ S /b/\n"
API_PATTERN = r"(?:foo|bar)\([0-9]+\)"
API_GRAMMAR = 'S -> Function "(" Number ")"\nFunction -> "foo" | "bar"\nNumber -> "123" | "456"\n'


@pytest.fixture
def food_vocab() -> Vocabulary:
    return Vocabulary.from_strings(FOOD_TOKENS)


@pytest.fixture
def food_ids(food_vocab) -> dict[str, int]:
    return {t: i for i, t in enumerate(food_vocab.tokens)}


@pytest.fixture
def anbn_vocab() -> Vocabulary:
    return Vocabulary.from_strings(ANBN_TOKENS)


@pytest.fixture
def api_vocab() -> Vocabulary:
    return Vocabulary.from_strings(API_TOKENS)


def is_anbn(text: str) -> bool:
    k = len(text) // 2
    return k >= 1 and len(text) == 2 * k and text == "a" * k + "b" * k
