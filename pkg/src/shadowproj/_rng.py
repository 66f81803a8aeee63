"""SplitMix64 generator and seed mixing.

Pure-integer arithmetic, so draws reproduce bit-for-bit on every platform.
Constants are the published SplitMix64 ones (Steele, Lea & Flood 2014).
"""

_MASK = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB


def _finalize(z):
    z = ((z ^ (z >> 30)) * _MUL1) & _MASK
    z = ((z ^ (z >> 27)) * _MUL2) & _MASK
    return z ^ (z >> 31)


def mix_seed(seed, *keys):
    """Derive a substream seed from ``seed`` and integer keys (trial, n, m...)."""
    h = _finalize((int(seed) + GOLDEN_GAMMA) & _MASK)
    for k in keys:
        h = _finalize((h ^ _finalize((int(k) + GOLDEN_GAMMA) & _MASK)) & _MASK)
    return h


class SplitMix64:
    """Deterministic 64-bit generator.

    >>> g = SplitMix64(0)
    >>> g.next_u64()
    16294208416658607535
    """

    def __init__(self, seed):
        self.state = int(seed) & _MASK

    def next_u64(self):
        self.state = (self.state + GOLDEN_GAMMA) & _MASK
        return _finalize(self.state)

    def uniform(self):
        """Double in [0, 1) built from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniforms(self, n):
        return [self.uniform() for _ in range(n)]
