"""Seeded 64-bit linear congruential generator.

Used for every "random" choice in the library (sample points, probe
directions) so that reports are reproducible bit-for-bit from (config,
seed) and independent of platform RNG implementations.  Multiplier and
increment are Knuth's MMIX constants.
"""

_MULT = 6364136223846793005
_INC = 1442695040888963407
_MASK = (1 << 64) - 1


class Lcg:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        # one warm-up step decorrelates small seeds
        self.state = ((int(seed) ^ 0x9E3779B97F4A7C15) * _MULT + _INC) & _MASK

    def next_u64(self) -> int:
        self.state = (self.state * _MULT + _INC) & _MASK
        return self.state

    def next_unit(self) -> float:
        """Uniform in the open interval (0, 1): 53-bit draw, half-step
        offset keeps the endpoints unreachable."""
        return ((self.next_u64() >> 11) + 0.5) * 2.0**-53

    def next_in(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.next_unit()
