"""Portable deterministic random number generation.

Dataset splits and the reference backbone must reproduce bit-for-bit across
platforms and languages, so randomness comes from splitmix64, a published
64-bit generator defined by three multiply/xor-shift steps on a counter.
The first outputs for seed 0 are fixed anchors (0xC61D3B8956007048,
0xE530EC3EDE6D2EFF, ...) that the test suite checks against an independent
transcription of the published C code.
"""

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1E4B87F9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """splitmix64 stream seeded with an unsigned 64-bit integer."""

    def __init__(self, seed):
        self._state = seed & MASK64

    def next_u64(self):
        """Return the next raw 64-bit output."""
        self._state = (self._state + _GAMMA) & MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        return z ^ (z >> 31)

    def next_double(self):
        """Return a float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def next_below(self, n):
        """Return an integer in [0, n). Modulo reduction, documented bias
        below 2^-40 for any n that fits a dataset index."""
        if n <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % n

    def shuffle(self, items):
        """Fisher-Yates shuffle, descending, in place."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items


def derive_seed(seed, index):
    """Per-repeat stream seed: base seed plus the repeat index, mod 2^64."""
    return (seed + index) & MASK64
