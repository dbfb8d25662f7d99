"""Deterministic 64-bit PRNG with named sub-streams.

Every stochastic component in the harness (bat spawning, platform layout,
policy sampling, minibatch shuffling) draws from its own stream derived from
a session or training seed plus a purpose tag. Identical seeds therefore
yield bit-identical simulations regardless of which other streams were
consumed in between.

Generator: xorshift64* (Vigna's multiplier variant). Stream derivation:
the state is seeded with ``splitmix64(seed XOR fnv1a64(tag))``, which
decorrelates streams sharing a seed.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: str | bytes) -> int:
    """FNV-1a hash of a UTF-8 string or raw bytes, used to turn purpose tags
    into ints."""
    h = _FNV_OFFSET
    if isinstance(data, str):
        data = data.encode("utf-8")
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def splitmix64(x: int) -> int:
    """One splitmix64 finalization round; used to whiten derived seeds."""
    x = (x + _SPLITMIX_GAMMA) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, *tags: object) -> int:
    """Derive a sub-stream seed from a base seed and a sequence of tags.

    Tags may be strings or ints; the derivation chain is order-sensitive.
    """
    h = seed & _MASK64
    for tag in tags:
        if isinstance(tag, int):
            h = splitmix64(h ^ (tag & _MASK64))
        else:
            h = splitmix64(h ^ fnv1a64(str(tag)))
    return h


class Rng:
    """xorshift64* stream. State is a single nonzero 64-bit integer."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        # xorshift state must be nonzero; remap 0 to an arbitrary constant
        s = splitmix64(seed & _MASK64)
        self.state = s if s != 0 else 0x9E3779B97F4A7C15

    @classmethod
    def for_purpose(cls, seed: int, *tags: object) -> "Rng":
        """Stream for one purpose, e.g. Rng.for_purpose(seed, "spawn")."""
        return cls(derive_seed(seed, *tags))

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x = (x ^ (x << 25)) & _MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK64

    def uniform(self) -> float:
        """Float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randrange(self, n: int) -> int:
        """Unbiased integer in [0, n) via rejection sampling."""
        if n <= 0:
            raise ValueError("randrange requires n >= 1")
        limit = (_MASK64 + 1) - ((_MASK64 + 1) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def choice(self, seq):
        return seq[self.randrange(len(seq))]
