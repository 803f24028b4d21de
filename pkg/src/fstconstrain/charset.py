"""Interval sets over integer symbols, used as compact character-class labels."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

MAX_CODE_POINT = 0x10FFFF


def _normalize(ranges: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    items = sorted((lo, hi) for lo, hi in ranges if lo <= hi)
    merged: list[list[int]] = []
    for lo, hi in items:
        if merged and lo <= merged[-1][1] + 1:
            if hi > merged[-1][1]:
                merged[-1][1] = hi
        else:
            merged.append([lo, hi])
    return tuple((lo, hi) for lo, hi in merged)


@dataclass(frozen=True)
class CharSet:
    """A set of code points stored as sorted, disjoint, non-adjacent closed intervals."""

    ranges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "ranges", _normalize(self.ranges))

    @classmethod
    def of(cls, chars: Iterable[int | str]) -> CharSet:
        points = [ord(c) if isinstance(c, str) else c for c in chars]
        return cls(tuple((p, p) for p in points))

    @classmethod
    def range(cls, lo: int | str, hi: int | str) -> CharSet:
        lo = ord(lo) if isinstance(lo, str) else lo
        hi = ord(hi) if isinstance(hi, str) else hi
        return cls(((lo, hi),))

    @classmethod
    def any(cls) -> CharSet:
        return cls(((0, MAX_CODE_POINT),))

    def __contains__(self, symbol) -> bool:
        if isinstance(symbol, str):
            symbol = ord(symbol)
        ranges = self.ranges
        lo, hi = 0, len(ranges)
        while lo < hi:
            mid = (lo + hi) // 2
            if ranges[mid][1] < symbol:
                lo = mid + 1
            else:
                hi = mid
        return lo < len(ranges) and ranges[lo][0] <= symbol

    def __bool__(self) -> bool:
        return bool(self.ranges)

    def __len__(self) -> int:
        return sum(hi - lo + 1 for lo, hi in self.ranges)

    def __iter__(self) -> Iterator[int]:
        for lo, hi in self.ranges:
            yield from range(lo, hi + 1)

    def __or__(self, other: CharSet) -> CharSet:
        return CharSet(self.ranges + other.ranges)

    def __and__(self, other: CharSet) -> CharSet:
        out = []
        i = j = 0
        a, b = self.ranges, other.ranges
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return CharSet(tuple(out))

    def __sub__(self, other: CharSet) -> CharSet:
        return self & other.negate()

    def negate(self, universe: int = MAX_CODE_POINT) -> CharSet:
        out = []
        prev = 0
        for lo, hi in self.ranges:
            if lo > prev:
                out.append((prev, lo - 1))
            prev = hi + 1
        if prev <= universe:
            out.append((prev, universe))
        return CharSet(tuple(out))

    def is_single(self) -> bool:
        return len(self.ranges) == 1 and self.ranges[0][0] == self.ranges[0][1]

    def __repr__(self) -> str:
        return f"CharSet({self.describe()})"

    def describe(self) -> str:
        parts = []
        for lo, hi in self.ranges:
            if lo == hi:
                parts.append(_show(lo))
            else:
                parts.append(f"{_show(lo)}-{_show(hi)}")
        return "[" + "".join(parts) + "]"


def _show(cp: int) -> str:
    if cp > MAX_CODE_POINT:
        return f"<{cp}>"
    ch = chr(cp)
    if ch.isprintable() and ch not in "[]-\\^":
        return ch
    if cp < 0x100:
        return f"\\x{cp:02x}"
    return f"\\u{cp:04x}" if cp < 0x10000 else f"\\U{cp:08x}"


def partition(sets: list[tuple[tuple[int, int], ...]]) -> list[tuple[int, int, frozenset[int]]]:
    """Split overlapping interval lists into disjoint pieces.

    Returns ``(lo, hi, members)`` triples where ``members`` holds the indices
    of the input sets covering ``[lo, hi]``. Uncovered gaps are omitted.
    """
    events: dict[int, list[tuple[int, int]]] = {}
    for idx, ranges in enumerate(sets):
        for lo, hi in ranges:
            events.setdefault(lo, []).append((idx, +1))
            events.setdefault(hi + 1, []).append((idx, -1))
    points = sorted(events)
    active: dict[int, int] = {}
    out = []
    for k, point in enumerate(points):
        for idx, delta in events[point]:
            count = active.get(idx, 0) + delta
            if count:
                active[idx] = count
            else:
                active.pop(idx, None)
        if active and k + 1 < len(points):
            out.append((point, points[k + 1] - 1, frozenset(active)))
    return out
