"""Seedable pseudorandom primitives shared by every sampling path.

All randomness in this package flows through SplitMix64 so that a run is
reproducible from a single integer seed, and so the compiled kernels and the
pure-Python code consume random numbers in exactly the same order and produce
bit-identical streams. Uniforms are built from the top 52 bits as
((x >> 12) + 0.5) * 2^-52, which is exact in float64 and never returns 0.0 or
1.0; log() and pow() therefore never see an endpoint.

Parallel trials derive per-trial seeds with spawn_seed(master, index), which
mixes the trial index through the same finalizer. That is the documented
seed-splitting rule for every multi-trial harness in this package.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

# Skips longer than any stream we will ever see saturate here instead of
# overflowing int64 in the compiled kernels.
MAX_SKIP = 1 << 62
_U52 = 2.0 ** -52


def mix64(z: int) -> int:
    """SplitMix64 finalizer: avalanche a 64-bit value."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def spawn_seed(master_seed: int, index: int) -> int:
    """Derive the seed for trial `index` from a master seed.

    This is the seed-splitting rule used by all parallel harnesses: mix the
    master seed xored with index * GOLDEN through the SplitMix64 finalizer.
    """
    return mix64((master_seed ^ ((index * GOLDEN) & MASK64)) & MASK64)


class SplitMix64:
    """SplitMix64 generator; the only RNG used anywhere in this package."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def uniform(self) -> float:
        """Uniform in the open interval (0,1); exact float64 arithmetic."""
        return ((self.next_u64() >> 12) + 0.5) * _U52

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n). n must be positive and modest (< 2^51)."""
        j = int(self.uniform() * n)
        return n - 1 if j >= n else j


def skip_from_uniform(w: float, u: float) -> int:
    """Geometric skip length floor(ln(u)/ln(1-w)) for one uniform u.

    Saturates to MAX_SKIP when the ratio would overflow (w tiny), which is
    equivalent for any finite stream.
    """
    ratio = math.log(u) / math.log1p(-w)
    if ratio >= 4.0e18:
        return MAX_SKIP
    return int(ratio)


def geo_sample(w: float, rng: SplitMix64) -> int:
    """Draw a geometric skip length with success weight w in (0,1)."""
    return skip_from_uniform(w, rng.uniform())
