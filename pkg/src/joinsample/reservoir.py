"""Predicate-aware reservoir sampling over streams that support skipping.

The sampler keeps k uniform samples without replacement from the real items of
a stream that may also contain dummy items. While the reservoir is filling it
scans every item with next(); once full it jumps with geometrically
distributed skip lengths, touching only the items it lands on. A landing on a
real item replaces a uniformly chosen slot and lowers the acceptance
threshold; a landing on a dummy item just draws the next skip. Streams may
arrive as a sequence of batches: batch_update carries the unused part of a
skip across batch boundaries, so the samples are distributed exactly as if
the batches had been one concatenated stream.

The module also carries the analysis helpers used by the test harness:
DensityProfile describes the real/dummy layout of a concrete stream,
expected_stops evaluates the closed-form expected number of skip landings for
a profile, and density_of / the *_density combinators compute stream density
floors.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .rng import SplitMix64, geo_sample


class ListStream:
    """Skippable stream over a list of items. None marks exhaustion."""

    __slots__ = ("items", "pos")

    def __init__(self, items):
        self.items = items
        self.pos = -1

    def next(self):
        return self.skip(0)

    def skip(self, i: int):
        """Skip i items, land on the next one; None if that runs off the end."""
        self.pos += i + 1
        if self.pos >= len(self.items):
            return None
        return self.items[self.pos]

    def remain(self) -> int:
        return len(self.items) - self.pos - 1


class Reservoir:
    """k uniform samples without replacement from the real items of a stream."""

    def __init__(self, capacity: int, rng: SplitMix64):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.rng = rng
        self.samples: list = []
        self.threshold = math.inf  # sentinel: skip machinery not initialized
        self.pending_skip = 0
        self.seen = 0  # classic-step item counter
        # raw work counters
        self.next_calls = 0
        self.skip_calls = 0
        self.skip_stops = 0
        self.remain_calls = 0
        self.dummy_hits = 0
        self.replacements = 0

    # -- internals ---------------------------------------------------------

    def _init_skip(self) -> None:
        self.threshold = self.rng.uniform() ** (1.0 / self.capacity)
        self.pending_skip = geo_sample(self.threshold, self.rng)

    def _accept(self, item) -> None:
        j = self.rng.randrange(self.capacity)
        self.samples[j] = item
        self.threshold *= self.rng.uniform() ** (1.0 / self.capacity)
        self.replacements += 1

    def _remain(self, batch) -> int:
        self.remain_calls += 1
        return batch.remain()

    # -- sampling ----------------------------------------------------------

    def step_classic(self, item) -> None:
        """Classic per-item reservoir step (no skipping, real items only)."""
        self.seen += 1
        if len(self.samples) < self.capacity:
            self.samples.append(item)
            return
        j = self.rng.randrange(self.seen)
        if j < self.capacity:
            self.samples[j] = item
            self.replacements += 1

    def feed(self, stream, theta) -> "Reservoir":
        """Consume one stream to exhaustion (fill phase, then skip phase)."""
        while len(self.samples) < self.capacity:
            item = stream.next()
            self.next_calls += 1
            if item is None:
                return self
            if theta(item):
                self.samples.append(item)
        if self.threshold > 1.0:
            self._init_skip()
        while True:
            item = stream.skip(self.pending_skip)
            self.skip_calls += 1
            if item is None:
                return self
            self.skip_stops += 1
            if theta(item):
                self._accept(item)
            else:
                self.dummy_hits += 1
            self.pending_skip = geo_sample(self.threshold, self.rng)

    def batch_update(self, batch, theta) -> "Reservoir":
        """Consume one batch, carrying the unused skip into the next batch.

        Equivalent to feed() over the concatenation of all batches passed so
        far: the skip left over when this batch ends is stored in
        pending_skip and charged against the next batch first.
        """
        while len(self.samples) < self.capacity and self._remain(batch) > 0:
            item = batch.next()
            self.next_calls += 1
            if theta(item):
                self.samples.append(item)
        if len(self.samples) < self.capacity:
            return self
        if self.threshold > 1.0:
            # initialized exactly once ever, the first time the reservoir
            # is full; the sentinel keeps later batches from re-rolling it
            self._init_skip()
        while self._remain(batch) > self.pending_skip:
            item = batch.skip(self.pending_skip)
            self.skip_calls += 1
            self.skip_stops += 1
            if theta(item):
                self._accept(item)
            else:
                self.dummy_hits += 1
            self.pending_skip = geo_sample(self.threshold, self.rng)
        self.pending_skip -= self._remain(batch)
        return self


# -- stream layout analysis -------------------------------------------------


class DensityProfile:
    """Real/dummy layout of a concrete finite stream.

    reals_before[i-1] is the number of real items among the first i-1 stream
    positions, for i = 1..N (so reals_before[0] == 0).
    """

    def __init__(self, flags):
        self.flags = [bool(f) for f in flags]
        self.length = len(self.flags)
        self.reals_before = [0] * self.length
        run = 0
        for i in range(1, self.length):
            if self.flags[i - 1]:
                run += 1
            self.reals_before[i] = run

    def fill_end(self, k: int) -> int:
        """Smallest position i with k real items before it; N+1 if none."""
        for i in range(1, self.length + 1):
            if self.reals_before[i - 1] == k:
                return i
        return self.length + 1

    @property
    def phi(self) -> Fraction:
        """Tightest density: largest phi with reals_before >= phi*(i-1)."""
        best = Fraction(1)
        for i in range(2, self.length + 1):
            best = min(best, Fraction(self.reals_before[i - 1], i - 1))
            if best == 0:
                break
        return best


def expected_stops(profile: DensityProfile, k: int) -> tuple[int, float]:
    """Closed-form (fill next() count, expected skip-phase landings)."""
    p = profile.fill_end(k)
    stops = 0.0
    for i in range(p, profile.length + 1):
        stops += k / (profile.reals_before[i - 1] + 1)
    return p - 1, stops


def density_of(flags) -> Fraction:
    """Density of a concrete real/dummy sequence (1 when vacuous)."""
    return DensityProfile(flags).phi


def concat_density(phi1, phi2):
    """Density floor for the concatenation of two streams."""
    return min(phi1, phi2)


def product_density(phi1, phi2):
    """Density floor for the row-major Cartesian product of two streams."""
    return phi1 * phi2 / 2


def pad_density(phi, m: int, n: int):
    """Density floor after appending n dummies to a phi-dense stream of m."""
    return phi * m / (m + n) if isinstance(phi, float) else phi * Fraction(m, m + n)
