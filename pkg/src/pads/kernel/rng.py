"""Per-entity random streams.

Each entity carries a single 64-bit SplitMix64 state inside its serialized
record, so its random stream moves with it on migration and never depends on
which LP happens to execute it.
"""

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_INV53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    """SplitMix64 finalizer (a bijection on 64-bit integers)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def entity_seed(global_seed: int, entity_id: int) -> int:
    return mix64(mix64(global_seed ^ GOLDEN) ^ ((entity_id * GOLDEN) & MASK64))


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, state: int):
        self.state = state & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * _INV53

    def below(self, n: int) -> int:
        """Uniform integer in [0, n). Multiply-shift; bias is below 2**-40 for n < 2**24."""
        return (self.next_u64() * n) >> 64
