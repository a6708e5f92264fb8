"""Portable seeded generator.

State is initialised with one round of splitmix64 applied to the seed (so
seed 0 is usable), then advanced by xorshift64*::

    x ^= x >> 12
    x ^= x << 25   (mod 2**64)
    x ^= x >> 27
    out = x * 0x2545F4914F6CDD1D  (mod 2**64)

The same recurrence in any language reproduces every sample, corpus and
verdict in this package.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

U64 = (1 << 64) - 1
T = TypeVar("T")


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & U64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & U64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & U64
    return z ^ (z >> 31)


class XorShift64Star:
    def __init__(self, seed: int):
        self.state = splitmix64(seed & U64) or 1

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & U64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & U64

    def below(self, n: int) -> int:
        """Integer in [0, n). Modulo reduction; the bias is irrelevant here."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def between(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi], inclusive."""
        return lo + self.below(hi - lo + 1)

    def choice(self, items: Sequence[T]) -> T:
        return items[self.below(len(items))]
