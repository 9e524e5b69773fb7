"""Array-backed sampling kernels for flag streams.

The Monte Carlo harnesses need millions of sampler runs over streams whose
items are just real/dummy flags (item identity = position). This module holds
those hot loops. Each kernel is written once as a plain-Python function and
compiled with numba when it is available; setting JOINSAMPLE_NO_NUMBA=1 (or a
failed numba import) selects the interpreted fallback. Both paths consume
random numbers in exactly the same order as reservoir.Reservoir driven by
rng.SplitMix64, so a kernel run and a pure-Python run with the same seed
produce the same samples bit for bit; tests assert this.

A batched stream is one concatenated flags array plus a sizes array; skip
lengths carry across batch boundaries exactly as Reservoir.batch_update does.
Trial drivers derive per-trial seeds with the package seed-splitting rule and
can tally per-item inclusion counts at checkpoints, which is how the
uniformity harnesses replay engine batch layouts at scale.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .rng import GOLDEN, MASK64, MAX_SKIP, spawn_seed

_ENV_FLAG = "JOINSAMPLE_NO_NUMBA"


def _env_disabled() -> bool:
    return os.environ.get(_ENV_FLAG, "") not in ("", "0")


try:
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - environment without numba
    HAS_NUMBA = False

    def _njit(**kwargs):
        def deco(fn):
            return fn

        return deco


def using_numba() -> bool:
    """True when the compiled path is the default for this process."""
    return HAS_NUMBA and not _env_disabled()


# Counter slots written by the kernels, in order.
COUNTER_NAMES = ("next_calls", "skip_calls", "skip_stops", "dummy_hits",
                 "replacements", "filled")

_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U12 = np.uint64(12)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_UGOLDEN = np.uint64(GOLDEN)
_U52 = 2.0 ** -52


def _core_run_batched(flags, sizes, k, seed, samples, counters):
    """Reservoir over a batched flag stream; fills samples with positions.

    samples must hold k int64 slots; returns the number filled. counters is
    an int64 array laid out per COUNTER_NAMES.
    """
    state = np.uint64(seed)
    w = math.inf
    q = 0
    nfill = 0
    base = 0
    inv_k = 1.0 / k
    for b in range(sizes.shape[0]):
        size = sizes[b]
        pos = -1
        while nfill < k and size - pos - 1 > 0:
            pos += 1
            counters[0] += 1
            if flags[base + pos] != 0:
                samples[nfill] = base + pos
                nfill += 1
        if nfill < k:
            base += size
            continue
        if w > 1.0:
            state += _UGOLDEN
            z = state
            z = (z ^ (z >> _U30)) * _M1
            z = (z ^ (z >> _U27)) * _M2
            z = z ^ (z >> _U31)
            u = (np.float64(z >> _U12) + 0.5) * _U52
            w = u ** inv_k
            state += _UGOLDEN
            z = state
            z = (z ^ (z >> _U30)) * _M1
            z = (z ^ (z >> _U27)) * _M2
            z = z ^ (z >> _U31)
            u = (np.float64(z >> _U12) + 0.5) * _U52
            ratio = math.log(u) / math.log1p(-w)
            q = MAX_SKIP if ratio >= 4.0e18 else int(ratio)
        while size - pos - 1 > q:
            pos += q + 1
            counters[1] += 1
            counters[2] += 1
            if flags[base + pos] != 0:
                state += _UGOLDEN
                z = state
                z = (z ^ (z >> _U30)) * _M1
                z = (z ^ (z >> _U27)) * _M2
                z = z ^ (z >> _U31)
                u = (np.float64(z >> _U12) + 0.5) * _U52
                j = int(u * k)
                if j >= k:
                    j = k - 1
                samples[j] = base + pos
                counters[4] += 1
                state += _UGOLDEN
                z = state
                z = (z ^ (z >> _U30)) * _M1
                z = (z ^ (z >> _U27)) * _M2
                z = z ^ (z >> _U31)
                u = (np.float64(z >> _U12) + 0.5) * _U52
                w = w * u ** inv_k
            else:
                counters[3] += 1
            state += _UGOLDEN
            z = state
            z = (z ^ (z >> _U30)) * _M1
            z = (z ^ (z >> _U27)) * _M2
            z = z ^ (z >> _U31)
            u = (np.float64(z >> _U12) + 0.5) * _U52
            ratio = math.log(u) / math.log1p(-w)
            q = MAX_SKIP if ratio >= 4.0e18 else int(ratio)
        q -= size - pos - 1
        base += size
    counters[5] = nfill
    return nfill


def _core_run_classic(flags, k, seed, samples):
    """Classic reservoir over the real items of a flag stream."""
    state = np.uint64(seed)
    nfill = 0
    seen = 0
    for pos in range(flags.shape[0]):
        if flags[pos] == 0:
            continue
        seen += 1
        if nfill < k:
            samples[nfill] = pos
            nfill += 1
            continue
        state += _UGOLDEN
        z = state
        z = (z ^ (z >> _U30)) * _M1
        z = (z ^ (z >> _U27)) * _M2
        z = z ^ (z >> _U31)
        u = (np.float64(z >> _U12) + 0.5) * _U52
        j = int(u * seen)
        if j >= seen:
            j = seen - 1
        if j < k:
            samples[j] = pos
    return nfill


def _core_trials(flags, sizes, k, master, lo, hi, checkpoints, real_rank,
                 counts, work):
    """Run trials [lo,hi); tally sample inclusion per checkpoint.

    checkpoints holds batch counts (ascending, last == len(sizes)); counts has
    shape (len(checkpoints), #reals); work aggregates [stops, fill_next] over
    trials. Per-trial seeds follow the package splitting rule.
    """
    samples = np.empty(k, dtype=np.int64)
    for trial in range(lo, hi):
        s = (np.uint64(master) ^ (np.uint64(trial) * _UGOLDEN))
        s = (s ^ (s >> _U30)) * _M1
        s = (s ^ (s >> _U27)) * _M2
        s = s ^ (s >> _U31)
        state = s
        w = math.inf
        q = 0
        nfill = 0
        base = 0
        inv_k = 1.0 / k
        cp = 0
        while cp < checkpoints.shape[0] and checkpoints[cp] <= 0:
            cp += 1
        for b in range(sizes.shape[0]):
            size = sizes[b]
            pos = -1
            while nfill < k and size - pos - 1 > 0:
                pos += 1
                work[1] += 1
                if flags[base + pos] != 0:
                    samples[nfill] = base + pos
                    nfill += 1
            if nfill >= k:
                if w > 1.0:
                    state += _UGOLDEN
                    z = state
                    z = (z ^ (z >> _U30)) * _M1
                    z = (z ^ (z >> _U27)) * _M2
                    z = z ^ (z >> _U31)
                    u = (np.float64(z >> _U12) + 0.5) * _U52
                    w = u ** inv_k
                    state += _UGOLDEN
                    z = state
                    z = (z ^ (z >> _U30)) * _M1
                    z = (z ^ (z >> _U27)) * _M2
                    z = z ^ (z >> _U31)
                    u = (np.float64(z >> _U12) + 0.5) * _U52
                    ratio = math.log(u) / math.log1p(-w)
                    q = MAX_SKIP if ratio >= 4.0e18 else int(ratio)
                while size - pos - 1 > q:
                    pos += q + 1
                    work[0] += 1
                    if flags[base + pos] != 0:
                        state += _UGOLDEN
                        z = state
                        z = (z ^ (z >> _U30)) * _M1
                        z = (z ^ (z >> _U27)) * _M2
                        z = z ^ (z >> _U31)
                        u = (np.float64(z >> _U12) + 0.5) * _U52
                        j = int(u * k)
                        if j >= k:
                            j = k - 1
                        samples[j] = base + pos
                        state += _UGOLDEN
                        z = state
                        z = (z ^ (z >> _U30)) * _M1
                        z = (z ^ (z >> _U27)) * _M2
                        z = z ^ (z >> _U31)
                        u = (np.float64(z >> _U12) + 0.5) * _U52
                        w = w * u ** inv_k
                    state += _UGOLDEN
                    z = state
                    z = (z ^ (z >> _U30)) * _M1
                    z = (z ^ (z >> _U27)) * _M2
                    z = z ^ (z >> _U31)
                    u = (np.float64(z >> _U12) + 0.5) * _U52
                    ratio = math.log(u) / math.log1p(-w)
                    q = MAX_SKIP if ratio >= 4.0e18 else int(ratio)
                q -= size - pos - 1
            base += size
            while cp < checkpoints.shape[0] and checkpoints[cp] == b + 1:
                for s_i in range(nfill):
                    counts[cp, real_rank[samples[s_i]]] += 1
                cp += 1
    return 0


def _core_classic_trials(flags, k, master, lo, hi, real_rank, counts):
    """Classic-reservoir trials; tallies final-sample inclusion counts."""
    samples = np.empty(k, dtype=np.int64)
    for trial in range(lo, hi):
        s = (np.uint64(master) ^ (np.uint64(trial) * _UGOLDEN))
        s = (s ^ (s >> _U30)) * _M1
        s = (s ^ (s >> _U27)) * _M2
        s = s ^ (s >> _U31)
        state = s
        nfill = 0
        seen = 0
        for pos in range(flags.shape[0]):
            if flags[pos] == 0:
                continue
            seen += 1
            if nfill < k:
                samples[nfill] = pos
                nfill += 1
                continue
            state += _UGOLDEN
            z = state
            z = (z ^ (z >> _U30)) * _M1
            z = (z ^ (z >> _U27)) * _M2
            z = z ^ (z >> _U31)
            u = (np.float64(z >> _U12) + 0.5) * _U52
            j = int(u * seen)
            if j >= seen:
                j = seen - 1
            if j < k:
                samples[j] = pos
        for s_i in range(nfill):
            counts[real_rank[samples[s_i]]] += 1
    return 0


_run_batched_nb = None
_run_classic_nb = None
_trials_nb = None
_classic_trials_nb = None
if HAS_NUMBA:
    _run_batched_nb = _njit(cache=True, nogil=True)(_core_run_batched)
    _run_classic_nb = _njit(cache=True, nogil=True)(_core_run_classic)
    _trials_nb = _njit(cache=True, nogil=True)(_core_trials)
    _classic_trials_nb = _njit(cache=True, nogil=True)(_core_classic_trials)


def _pick(use_numba, compiled, plain):
    if use_numba is None:
        use_numba = using_numba()
    if use_numba and compiled is None:
        raise RuntimeError("numba path requested but numba is unavailable")
    return compiled if use_numba else plain


def run_batched(flags, sizes, k: int, seed: int, use_numba=None):
    """One sampler run over a batched flag stream.

    Returns (sample positions, counter dict). Positions refer to the
    concatenated stream; the sample order is slot order, not arrival order.
    """
    flags = np.ascontiguousarray(flags, dtype=np.uint8)
    sizes = np.ascontiguousarray(sizes, dtype=np.int64)
    samples = np.empty(k, dtype=np.int64)
    counters = np.zeros(len(COUNTER_NAMES), dtype=np.int64)
    fn = _pick(use_numba, _run_batched_nb, _core_run_batched)
    with np.errstate(over="ignore"):
        nfill = fn(flags, sizes, k, np.uint64(seed & MASK64), samples,
                   counters)
    out = dict(zip(COUNTER_NAMES, counters.tolist()))
    return samples[:nfill].copy(), out


def run_feed(flags, k: int, seed: int, use_numba=None):
    """One sampler run over a single unbatched flag stream."""
    flags = np.ascontiguousarray(flags, dtype=np.uint8)
    sizes = np.array([flags.shape[0]], dtype=np.int64)
    return run_batched(flags, sizes, k, seed, use_numba=use_numba)


def run_classic(flags, k: int, seed: int, use_numba=None):
    """Classic reservoir over the real items of a flag stream."""
    flags = np.ascontiguousarray(flags, dtype=np.uint8)
    samples = np.empty(k, dtype=np.int64)
    fn = _pick(use_numba, _run_classic_nb, _core_run_classic)
    with np.errstate(over="ignore"):
        nfill = fn(flags, k, np.uint64(seed & MASK64), samples)
    return samples[:nfill].copy()


def _split_ranges(n_trials: int, n_workers: int):
    step = (n_trials + n_workers - 1) // n_workers
    return [(lo, min(lo + step, n_trials)) for lo in range(0, n_trials, step)]


def inclusion_trials(flags, sizes, k: int, master_seed: int, n_trials: int,
                     checkpoints=None, use_numba=None, n_workers: int = 0):
    """Tally per-real-item inclusion counts over seeded trials.

    checkpoints lists batch counts after which samples are tallied (default:
    only after the final batch). Returns (counts, work) where counts has shape
    (len(checkpoints), #real items) indexed by real arrival rank, and work is
    the aggregate [skip stops, fill next calls] over all trials.
    """
    flags = np.ascontiguousarray(flags, dtype=np.uint8)
    sizes = np.ascontiguousarray(sizes, dtype=np.int64)
    n_batches = sizes.shape[0]
    if checkpoints is None:
        checkpoints = [n_batches]
    cps = np.ascontiguousarray(checkpoints, dtype=np.int64)
    rank = np.cumsum(flags, dtype=np.int64) - 1
    n_real = int(flags.sum())
    fn = _pick(use_numba, _trials_nb, _core_trials)
    if n_workers <= 1 or fn is _core_trials:
        counts = np.zeros((cps.shape[0], max(n_real, 1)), dtype=np.int64)
        work = np.zeros(2, dtype=np.int64)
        with np.errstate(over="ignore"):
            fn(flags, sizes, k, np.uint64(master_seed & MASK64), 0, n_trials,
               cps, rank, counts, work)
        return counts, work
    parts = _split_ranges(n_trials, n_workers)
    bufs = [(np.zeros((cps.shape[0], max(n_real, 1)), dtype=np.int64),
             np.zeros(2, dtype=np.int64)) for _ in parts]
    with ThreadPoolExecutor(max_workers=len(parts)) as ex:
        futs = [
            ex.submit(fn, flags, sizes, k, np.uint64(master_seed & MASK64),
                      lo, hi, cps, rank, c, wk)
            for (lo, hi), (c, wk) in zip(parts, bufs)
        ]
        for f in futs:
            f.result()
    counts = sum(c for c, _ in bufs)
    work = sum(wk for _, wk in bufs)
    return counts, work


def classic_inclusion_trials(flags, k: int, master_seed: int, n_trials: int,
                             use_numba=None):
    """Final-sample inclusion counts for classic-reservoir trials."""
    flags = np.ascontiguousarray(flags, dtype=np.uint8)
    rank = np.cumsum(flags, dtype=np.int64) - 1
    n_real = int(flags.sum())
    counts = np.zeros(max(n_real, 1), dtype=np.int64)
    fn = _pick(use_numba, _classic_trials_nb, _core_classic_trials)
    with np.errstate(over="ignore"):
        fn(flags, k, np.uint64(master_seed & MASK64), 0, n_trials, rank,
           counts)
    return counts
