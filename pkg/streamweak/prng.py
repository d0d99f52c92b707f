"""Portable pseudo random numbers for stream orders.

Stream orders must be identical across platforms and languages, so they are
drawn from xorshift64* (S. Vigna) instead of a library generator whose
algorithm may change between releases. Seeds are expanded with splitmix64 so
that every seed, including 0, gives a non-zero state.

Examples:
    >>> rng = Xorshift64Star(7)
    >>> rng.shuffle(list(range(4))) == Xorshift64Star(7).shuffle(list(range(4)))
    True
"""

from typing import List, MutableSequence, TypeVar

T = TypeVar("T")

MASK64 = (1 << 64) - 1
MULTIPLIER = 0x2545F4914F6CDD1D


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class Xorshift64Star:
    """xorshift64* generator (shifts 12, 25, 27)."""

    def __init__(self, seed: int) -> None:
        state = splitmix64(seed & MASK64)
        self.state = state if state else 1

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * MULTIPLIER) & MASK64

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection sampling."""
        if n <= 0:
            raise ValueError(f"n must be positive: {n}")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def random(self) -> float:
        """Uniform float in ``[0, 1)`` with 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def shuffle(self, items: MutableSequence[T]) -> MutableSequence[T]:
        """Fisher-Yates shuffle in place, last index first."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items

    def sample(self, population: int, size: int) -> List[int]:
        """``size`` distinct integers out of ``range(population)``, in draw order."""
        if not 0 <= size <= population:
            raise ValueError(f"Cannot draw {size} out of {population}.")
        pool = list(range(population))
        for i in range(size):
            j = i + self.below(population - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:size]
