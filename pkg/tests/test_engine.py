"""End-to-end engine behavior: sampling, snapshots, all three front ends."""

from __future__ import annotations

import random
from collections import Counter

import pytest

from joinsample.acyclic import build_indexes, index_insert
from joinsample.config import packaged_query
from joinsample.engine import BatchCursor, Engine, is_real
from joinsample.errors import PrimaryKeyViolation
from joinsample.oracle import oracle_join
from joinsample.reservoir import (DensityProfile, ListStream, Reservoir,
                                  expected_stops)
from joinsample.rng import SplitMix64


def random_events(q, rng, n, dom):
    names = list(q.schemas)
    return [(rng.choice(names),
             tuple(rng.randrange(dom) for _ in q.schemas[rel]))
            for rel in (rng.choice(names) for _ in range(n))]


def run_engine(qname, events, k, seed, grouping=None):
    eng = Engine(packaged_query(qname), k, seed, grouping)
    for rel, t in events:
        eng.feed(rel, t)
    return eng


def final_join(qname, events):
    q = packaged_query(qname)
    inst: dict = {n: [] for n in q.schemas}
    for rel, t in events:
        if t not in inst[rel]:
            inst[rel].append(t)
    return oracle_join(q.schemas, inst, attr_order=q.attributes, cap=None)


class TestBasics:
    def test_first_event_empty_batch(self):
        eng = Engine(packaged_query("two_table"), 5, 1)
        eng.feed("R1", (1, 2))
        snap = eng.snapshot()
        assert snap == {"events": 1, "sample_size": 0,
                        "join_positions": 0, "samples": []}

    def test_filling_reservoir_collects_everything(self):
        eng = Engine(packaged_query("two_table"), 10, 3)
        for x in range(7):
            eng.feed("R1", (x, 5))
        eng.feed("R2", (5, 9))
        snap = eng.snapshot()
        assert snap["join_positions"] == 7
        assert sorted(snap["samples"]) == [(x, 5, 9) for x in range(7)]

    def test_duplicate_events_counted_and_inert(self):
        eng = Engine(packaged_query("two_table"), 4, 3)
        eng.feed("R1", (1, 5))
        before = eng.snapshot()
        eng.feed("R1", (1, 5))
        after = eng.snapshot()
        assert eng.duplicate_events == 1
        assert after["samples"] == before["samples"]
        assert after["join_positions"] == before["join_positions"]

    def test_snapshot_is_pure(self):
        rng = random.Random(2)
        events = random_events(packaged_query("line3"), rng, 60, 3)
        eng = run_engine("line3", events, 5, 11)
        assert eng.snapshot() == eng.snapshot()

    def test_samples_are_always_real_results(self):
        rng = random.Random(4)
        q = packaged_query("line3")
        events = random_events(q, rng, 90, 3)
        eng = Engine(q, 6, 13)
        inst: dict = {n: [] for n in q.schemas}
        for i, (rel, t) in enumerate(events):
            eng.feed(rel, t)
            if t not in inst[rel]:
                inst[rel].append(t)
            if i % 10 == 9:
                current = oracle_join(q.schemas, inst,
                                      attr_order=q.attributes)
                assert set(eng.snapshot()["samples"]) <= current
        assert len(eng.snapshot()["samples"]) == min(6, len(
            oracle_join(q.schemas, inst, attr_order=q.attributes)))

    def test_sample_size_caps_at_result_count(self):
        events = [("R1", (1, 2)), ("R2", (2, 3)), ("R2", (2, 4))]
        eng = run_engine("two_table", events, 50, 7)
        assert eng.snapshot()["sample_size"] == 2

    def test_metrics_shape(self):
        eng = run_engine("line3", [("R1", (1, 2))], 3, 1)
        m = eng.metrics()
        assert m["events"] == 1
        assert set(m["index"]) == {"R1", "R2", "R3"}
        assert m["reservoir"]["skip_stops"] == 0


def record_batches(qname, events):
    """Replay the index side alone, collecting every batch's positions."""
    q = packaged_query(qname)
    rels = q.fresh_relations()
    idx = build_indexes(q, rels)
    items: list = []
    sizes: list = []
    for rel, t in events:
        if not rels[rel].insert(t):
            continue
        index_insert(idx, rel, t)
        batch = idx[rel].make_batch(t)
        items.extend(batch.sweep())
        sizes.append(batch.size)
    return items, sizes


class TestConcatenation:
    def test_engine_equals_one_long_stream(self):
        # consuming per-event batches with carried skips must match feeding
        # the concatenated positions as a single batch with the same seed
        rng = random.Random(19)
        events = random_events(packaged_query("line3"), rng, 150, 3)
        eng = run_engine("line3", events, 8, 55)
        items, _ = record_batches("line3", events)
        res = Reservoir(8, SplitMix64(55))
        res.batch_update(ListStream(items), is_real)
        assert res.samples == eng.reservoir.samples
        assert res.skip_stops == eng.reservoir.skip_stops
        assert eng.join_size_total == len(items)

    def test_stop_count_matches_closed_form(self):
        rng = random.Random(21)
        events = random_events(packaged_query("line3"), rng, 260, 4)
        items, _ = record_batches("line3", events)
        profile = DensityProfile([it is not None for it in items])
        k = 20
        fill_end, expect = expected_stops(profile, k)
        assert sum(profile.flags) > 3 * k  # stream long enough to matter
        trials = 600
        total = 0
        for s in range(trials):
            res = Reservoir(k, SplitMix64(1000 + s))
            res.batch_update(ListStream(items), is_real)
            total += res.skip_stops
            assert res.next_calls == fill_end
        assert total / trials == pytest.approx(expect, rel=0.10)


class TestUniformityLight:
    def test_two_table_small(self):
        events = [("R1", (x, 0)) for x in range(6)] + [("R2", (0, 9))]
        want = final_join("two_table", events)
        counts: Counter = Counter()
        trials = 4000
        for s in range(trials):
            eng = run_engine("two_table", events, 2, 9000 + s)
            for item in eng.snapshot()["samples"]:
                counts[item] += 1
        assert set(counts) == want
        expect = trials * 2 / len(want)
        sigma = (trials * (2 / len(want)) * (1 - 2 / len(want))) ** 0.5
        for item in want:
            assert abs(counts[item] - expect) < 4.5 * sigma

    def test_line3_prefix_checkpoint(self):
        rng = random.Random(31)
        q = packaged_query("line3")
        events = random_events(q, rng, 36, 2)
        half = len(events) // 2
        want_half = final_join("line3", events[:half])
        want_full = final_join("line3", events)
        assert want_half and want_full > want_half
        k = 3
        at_half: Counter = Counter()
        at_full: Counter = Counter()
        trials = 3000
        for s in range(trials):
            eng = Engine(q, k, 40_000 + s)
            for i, (rel, t) in enumerate(events):
                eng.feed(rel, t)
                if i + 1 == half:
                    at_half.update(eng.snapshot()["samples"])
            at_full.update(eng.snapshot()["samples"])
        for counts, want in ((at_half, want_half), (at_full, want_full)):
            p = min(k, len(want)) / len(want)
            sigma = (trials * p * (1 - p)) ** 0.5
            for item in want:
                assert abs(counts[item] - trials * p) < 4.5 * sigma


class TestGhdEngine:
    def test_triangle_counts_and_samples(self):
        rng = random.Random(37)
        q = packaged_query("triangle")
        events = random_events(q, rng, 70, 4)
        eng = Engine(q, 5, 61)
        for rel, t in events:
            eng.feed(rel, t)
        want = final_join("triangle", events)
        snap = eng.snapshot()
        # one simulated insertion per triangle, each a size-1 batch
        assert snap["join_positions"] == len(want)
        assert set(snap["samples"]) <= want
        assert snap["sample_size"] == min(5, len(want))

    def test_dumbbell_samples_real(self):
        rng = random.Random(41)
        q = packaged_query("dumbbell")
        events = random_events(q, rng, 120, 4)
        eng = Engine(q, 6, 67)
        for rel, t in events:
            eng.feed(rel, t)
        want = final_join("dumbbell", events)
        snap = eng.snapshot()
        assert set(snap["samples"]) <= want
        assert snap["sample_size"] == min(6, len(want))

    def test_triangle_uniform_k1(self):
        events = [("R1", (1, 2)), ("R2", (2, 3)), ("R3", (1, 3)),
                  ("R2", (2, 4)), ("R3", (1, 4)),
                  ("R1", (5, 2)), ("R3", (5, 3)), ("R3", (5, 4))]
        want = final_join("triangle", events)
        assert len(want) == 4
        counts: Counter = Counter()
        trials = 4000
        for s in range(trials):
            eng = run_engine("triangle", events, 1, 70_000 + s)
            counts.update(eng.snapshot()["samples"])
        expect = trials / len(want)
        sigma = (trials * (1 / len(want)) * (1 - 1 / len(want))) ** 0.5
        for item in want:
            assert abs(counts[item] - expect) < 4.5 * sigma


class TestFkEngine:
    def test_fused_samples_match_raw_join(self):
        rng = random.Random(47)
        q = packaged_query("fk_chain")
        events = []
        for i in range(3):
            events.append(("R2", (rng.randrange(9), i)))  # parent key Z=i
            events.append(("R4", (i, i)))                 # parent key U=i
            events.append(("R5", (i, i)))                 # parent key C=i
        for _ in range(40):
            events.append(("R3", (rng.randrange(3), rng.randrange(9),
                                  rng.randrange(3))))
            events.append(("R6", (rng.randrange(3), rng.randrange(9))))
            events.append(("R1", (rng.randrange(9), rng.randrange(9))))
        want = final_join("fk_chain", events)
        assert want
        eng = Engine(q, len(want) + 5, 83)
        for rel, t in events:
            eng.feed(rel, t)
        assert sorted(eng.snapshot()["samples"]) == sorted(want)

    def test_primary_key_violation_surfaces(self):
        eng = Engine(packaged_query("fk_chain"), 3, 1)
        eng.feed("R2", (1, 5))
        with pytest.raises(PrimaryKeyViolation):
            eng.feed("R2", (2, 5))

    def test_buffered_metric(self):
        eng = Engine(packaged_query("fk_chain"), 3, 1)
        eng.feed("R3", (5, 6, 7))
        assert eng.metrics()["fk_buffered"] == 1


class TestCursor:
    def test_cursor_walks_positions(self):
        q = packaged_query("two_table")
        rels = q.fresh_relations()
        idx = build_indexes(q, rels)
        for x in range(3):
            rels["R1"].insert((x, 1))
            index_insert(idx, "R1", (x, 1))
        rels["R2"].insert((1, 7))
        index_insert(idx, "R2", (1, 7))
        cur = BatchCursor(idx["R2"].make_batch((1, 7)))
        assert cur.remain() == 3
        assert cur.next() == (0, 1, 7)
        assert cur.skip(1) == (2, 1, 7)
        assert cur.remain() == 0
        assert cur.next() is None
