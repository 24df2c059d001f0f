"""Deterministic splitmix64 stream with Lemire multiply-shift bounded draws.

The exact bit-level behaviour is part of the camera-program file contract:
two implementations fed the same seed must produce the same curves.
"""

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed):
        self.state = int(seed) & MASK64

    def next_u64(self):
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def bounded(self, n):
        """Integer in [0, n) via (x * n) >> 64, no rejection step."""
        if n <= 0:
            raise ValueError(f"bound must be positive, got {n}")
        return (self.next_u64() * n) >> 64

    def uniform(self):
        """Float in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


def derive_seed(seed, index):
    """Independent 64-bit seed for stream `index` under a master seed."""
    return mix64((int(seed) + (int(index) + 1) * GOLDEN_GAMMA) & MASK64)
