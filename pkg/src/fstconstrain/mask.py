"""Token masks: allowed next tokens plus an end-of-sequence bit."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np


@dataclass(frozen=True)
class TokenMask:
    """``bits[i]`` is true iff token ``i`` may come next; ``finish`` allows EOS."""

    bits: np.ndarray
    finish: bool = False

    @classmethod
    def from_ids(cls, size: int, ids: Iterable[int], finish: bool = False) -> TokenMask:
        bits = np.zeros(size, dtype=bool)
        bits[list(ids)] = True
        bits.flags.writeable = False
        return cls(bits, finish)

    @classmethod
    def none(cls, size: int, finish: bool = False) -> TokenMask:
        return cls.from_ids(size, (), finish)

    def __len__(self) -> int:
        return len(self.bits)

    def __contains__(self, token_id: int) -> bool:
        return 0 <= token_id < len(self.bits) and bool(self.bits[token_id])

    def ids(self) -> list[int]:
        return np.flatnonzero(self.bits).tolist()

    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def is_empty(self) -> bool:
        return not self.finish and not self.bits.any()

    def to_hex(self) -> str:
        """Bitset as hex, bit ``i`` of byte ``i // 8`` in little-endian bit order."""
        return np.packbits(self.bits, bitorder="little").tobytes().hex()

    @classmethod
    def from_hex(cls, text: str, size: int, finish: bool = False) -> TokenMask:
        raw = np.frombuffer(bytes.fromhex(text), dtype=np.uint8)
        bits = np.unpackbits(raw, bitorder="little")[:size].astype(bool)
        bits.flags.writeable = False
        return cls(bits, finish)

    def to_json(self, fmt: str = "ids") -> dict:
        body = self.ids() if fmt == "ids" else self.to_hex()
        return {"format": fmt, "size": len(self.bits), "allowed": body, "finish": self.finish}

    def __eq__(self, other) -> bool:
        if not isinstance(other, TokenMask):
            return NotImplemented
        return self.finish == other.finish and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash((self.finish, self.bits.tobytes()))

    def __or__(self, other: TokenMask) -> TokenMask:
        bits = self.bits | other.bits
        bits.flags.writeable = False
        return TokenMask(bits, self.finish or other.finish)
